"""Exception types shared across the package.

Contract violations (bad labels, non-normalized states, invalid configs)
raise plain ``ValueError``; the classes here mark conditions that arise
mid-computation from otherwise valid inputs, so the CLI can map them to a
distinct exit status.
"""


class NumericalGuardError(RuntimeError):
    """A runtime numerical guard tripped (not a configuration error)."""


class BoundaryClearanceError(NumericalGuardError):
    """A wave packet approached the grid boundary closer than allowed."""


class LadderEdgeError(NumericalGuardError):
    """A momentum kick would push population off a truncated ladder."""


class SynthesisFailureError(NumericalGuardError):
    """Superoscillation synthesis did not reach an acceptable residual."""
