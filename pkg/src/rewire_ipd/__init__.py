"""Two-agent Iterated Prisoner's Dilemma with network rewiring, trained by
independent Double-DQN learners over prioritized replay."""

__version__ = "0.1.0"
