"""secsweep: width-scaled network families, lp evasion attacks, attack-failure
auditing, and security evaluation curves."""

__version__ = "0.1.0"
