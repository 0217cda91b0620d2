"""Exception hierarchy shared by all graphfl modules.

Every error raised on purpose derives from :class:`GraphFLError`, so callers
(and the CLI exit-code mapping) can distinguish our failures from bugs.
"""


class GraphFLError(Exception):
    """Base class for all graphfl errors."""


class ConfigError(GraphFLError):
    """Invalid configuration (unknown key, bad type, out-of-range value)."""


class DataError(GraphFLError):
    """Invalid or inconsistent input data."""


# --- graph construction / io ---

class OutOfRangeNode(DataError):
    """An edge endpoint or node id is outside [0, num_nodes)."""


class ShapeMismatch(DataError):
    """Array shapes disagree with the declared dimensions."""


class NoEdges(DataError):
    """Operation requires at least one edge."""


class UnlabeledEndpoint(DataError):
    """Edge homophily needs both endpoints labeled (label != -1)."""


class ParseError(DataError):
    """File could not be parsed as the expected format."""


class InvariantViolation(DataError):
    """A structural invariant does not hold; message names the field."""


# --- splitters / generators ---

class TooManyClients(DataError):
    """More clients requested than the source can support."""


class UnknownAttribute(DataError):
    """Requested node attribute column does not exist."""


class TooFewGroups(DataError):
    """Fewer attribute groups than clients."""


class EmptyClass(DataError):
    """A label class has no items to distribute."""


class MissingProps(DataError):
    """Graph collection lacks the per-graph property array."""


class InvalidParams(ConfigError):
    """Generator parameters are out of their valid range."""


# --- nn engine ---

class EmptyMask(DataError):
    """Loss/metric mask selects no rows."""


class MissingGrads(GraphFLError):
    """Optimizer step requested before gradients were populated."""


class StaleCache(GraphFLError):
    """Backward called with a cache from a different forward."""


# --- runtime / messaging ---

class DuplicateHandler(GraphFLError):
    """A handler is already registered for this message type."""


class UnknownMessageType(GraphFLError):
    """Delivered message type has no registered handler."""


class DeadlockError(GraphFLError):
    """The event queue drained before the protocol finished."""

    def __init__(self, round_num, missing, detail=""):
        self.round_num = round_num
        self.missing = sorted(missing)
        msg = f"deadlock at round {round_num}: missing senders {self.missing}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class MalformedFrame(GraphFLError):
    """Wire frame is truncated or has a bad magic/structure."""


class VersionMismatch(GraphFLError):
    """Wire or checkpoint format version is unsupported."""


class FrameTooLarge(GraphFLError):
    """Frame length exceeds the configured cap."""


# --- aggregation / training ---

class EmptyUpdateSet(GraphFLError):
    """Aggregation called with no client updates."""


class KTooLarge(ConfigError):
    """Requested more sampled clients than exist."""


class UncoveredName(ConfigError):
    """A parameter name matches no personalization rule."""


class TooFewClients(GraphFLError):
    """Metric needs at least two clients."""


# --- checkpoints / tuning ---

class ConfigHashMismatch(GraphFLError):
    """Checkpoint was produced under a different run configuration."""


class CorruptCheckpoint(GraphFLError):
    """Checkpoint bytes fail structural validation."""


class RunnerFailure(GraphFLError):
    """A tuning trial's runner raised; carries the config id."""

    def __init__(self, config_id, cause):
        self.config_id = config_id
        self.cause = cause
        super().__init__(f"runner failed for config {config_id}: {cause}")
