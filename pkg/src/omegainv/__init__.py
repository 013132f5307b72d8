"""Controller synthesis for disturbed linear systems against omega-regular
properties via hybrid controlled invariant sets."""

__version__ = "0.1.0"
