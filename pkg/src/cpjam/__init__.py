"""Link-level simulator for cyclic-prefix jamming of an untrusted AF relay."""

__version__ = "0.1.0"
