"""ocgov: repository mining, coupling/cohesion signals, and gamified governance.

The pipeline runs commit logs through service-boundary mapping and
rolling-window metrics, feeds the resulting snapshots to a deterministic
gamification engine (scores, badges, leaderboards, nudges, quests), and
ships an agent-based simulator that compares gamified governance against
non-gamified baselines.
"""

__version__ = "0.1.0"
