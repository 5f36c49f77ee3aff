"""Exception types shared across the observatory modules."""


class ObservatoryError(Exception):
    """Base class for all observatory errors."""


# --- ingest ---------------------------------------------------------------

class UnreadableDocument(ObservatoryError):
    """The document could not be parsed at the top level."""


class UnknownSource(ObservatoryError):
    """The source kind is not a member of the closed source set."""


# --- normalize ------------------------------------------------------------

class EmptyName(ObservatoryError):
    """A software name was empty after trimming."""


class EmptyAgent(ObservatoryError):
    """An author/agent string was empty after trimming."""


class UnparseableUrl(ObservatoryError):
    """A URL could not be parsed even after prepending a scheme."""


# --- enrich ---------------------------------------------------------------

class NotFound(ObservatoryError):
    """The requested entity does not exist."""


class RateLimited(ObservatoryError):
    """The provider kept rate-limiting after bounded retries."""


class TransportFailure(ObservatoryError):
    """The outbound transport failed in a non-retryable way."""


class MismatchedIdentity(ObservatoryError):
    """Enrichment payload does not belong to the target record."""


# --- disambiguate ---------------------------------------------------------

class DuplicateKey(ObservatoryError):
    """Two instances share the same (name, type, source, source_id) key."""


class UnknownBlock(ObservatoryError):
    """Referenced block id is not present in the block state."""


class PartitionMismatch(ObservatoryError):
    """A decision partition does not cover the block members exactly."""


class CorruptState(ObservatoryError):
    """Block state file failed schema or invariant validation."""


class ProxyFailure(ObservatoryError):
    """The agreement proxy failed to produce a verdict."""


class EmptyGroup(ObservatoryError):
    """merge_group was called with no members."""


# --- score ----------------------------------------------------------------

class UnknownIndicator(ObservatoryError):
    """Indicator id is not registered in the scoring config."""


class MissingIndicator(ObservatoryError):
    """A principle score is missing one of its registered indicators."""


class WeightSumViolation(ObservatoryError):
    """Indicator weights within a principle do not sum to 1."""


# --- stats ----------------------------------------------------------------

class EmptyCollection(ObservatoryError):
    """A statistic that needs at least one tool got an empty collection."""


class MixedWeightsVersion(ObservatoryError):
    """Profiles computed under different weight versions were aggregated."""


# --- exporters ------------------------------------------------------------

class MissingName(ObservatoryError):
    """Export requires a tool name."""


class MissingAuthors(ObservatoryError):
    """CFF export requires at least one author."""


class NoRepository(ObservatoryError):
    """Pull-request payload requires a repository URL on the tool."""


# --- cli / config ---------------------------------------------------------

class ConfigError(ObservatoryError):
    """Run configuration is invalid."""


class MissingUpstreamLayer(ObservatoryError):
    """A pipeline stage was requested before its upstream layer exists."""
