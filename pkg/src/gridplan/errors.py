"""Error taxonomy shared across the package.

Every failure mode that callers are expected to handle gets its own class so
that HTTP handlers and CLIs can map them to stable status codes.
"""


class GridplanError(Exception):
    """Base class for all gridplan errors."""


# geo
class NoNodeInRange(GridplanError):
    """No graph node within the allowed snap radius."""


# ingestion / store
class TransportError(GridplanError):
    """Network or file source unreachable after retry."""


class MalformedResponse(GridplanError):
    """Source payload is not valid Overpass JSON."""


class DanglingReference(GridplanError):
    """A way references a node id absent from the element set."""


class IoError(GridplanError):
    """Store file could not be read or written."""


class SchemaVersionMismatch(GridplanError):
    """Store manifest missing, unreadable, or of an unsupported version."""


# graph
class EmptyStore(GridplanError):
    """Graph construction requested on a store with no towers."""


class CorruptGraphFile(GridplanError):
    """Graph payload failed to parse or validate."""


# pathfinding
class UnknownNode(GridplanError):
    """Requested node id is not present in the graph."""


class Unreachable(GridplanError):
    """No path exists between the requested endpoints."""


class GraphUnavailable(GridplanError):
    """Graph could not be fetched from upstream after one retry."""


# mission solving
class PathServiceUnavailable(GridplanError):
    """A distance-matrix pair failed twice against the pathfinder."""


class UnreachableTargets(GridplanError):
    """Some targets have infinite cost from every UAV start position."""

    def __init__(self, target_ids):
        self.target_ids = list(target_ids)
        super().__init__(f"targets unreachable from every source: {self.target_ids}")


class Infeasible(GridplanError):
    """The routing instance admits no feasible assignment."""


# service runtime
class ConfigError(GridplanError):
    """Service configuration invalid for the requested role."""


class BindError(GridplanError):
    """Listen port already in use."""


class AllReplicasFailed(GridplanError):
    """Round-robin call failed on every attempted replica."""


class ReadinessTimeout(GridplanError):
    """Deployment did not become healthy within the timeout."""


# benchmarking
class GraphTooSmall(GridplanError):
    """Graph has fewer nodes than the workload requires."""


class WorkloadMismatch(GridplanError):
    """Reports being compared were produced from different workloads."""


class EndpointDown(GridplanError):
    """Benchmark target stopped answering; partial samples were flushed."""
