"""ccprobe: adversarial stress-testing lab for congestion controllers."""

__version__ = "0.1.0"
