"""Direct-load-control scheduling on three-phase unbalanced radial feeders.

The package couples a linearized multi-period three-phase DistFlow model
with per-appliance demand models, solves the resulting concave quadratic
program with an embedded interior-point solver plus cutting planes for the
feeder-head apparent-power cap, and validates every schedule against an
exact backward/forward-sweep power flow.
"""

__version__ = "0.1.0"
