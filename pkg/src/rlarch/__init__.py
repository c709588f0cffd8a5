"""Modular tabular reinforcement-learning framework.

Subpackages mirror the framework's components: ``env`` (environment core,
simulators, adapters), ``agent`` (approximators, learners, buffers),
``orchestrator`` (lifecycle, configuration, multi-agent and distributed
coordination), plus ``experiment``, ``persistence``, ``monitoring`` and the
``cli`` entry point.
"""

__version__ = "0.1.0"
