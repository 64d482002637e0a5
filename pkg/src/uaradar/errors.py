"""Exception types raised across the toolkit."""


class UaRadarError(Exception):
    """Base class for all toolkit errors."""


# -- snapshot loading / pairing --------------------------------------------

class MissingManifest(UaRadarError):
    pass


class SchemaViolation(UaRadarError):
    def __init__(self, field: str, detail: str = ""):
        self.field = field
        super().__init__(f"manifest field {field!r} invalid" + (f": {detail}" if detail else ""))


class DigestMismatch(UaRadarError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"content hash mismatch for {path!r}")


class MissingFile(UaRadarError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"file listed in manifest is missing: {path!r}")


class PageUrlMismatch(UaRadarError):
    pass


# -- DOM / tree matching ----------------------------------------------------

class EmptyDocument(UaRadarError):
    pass


class EmptyTree(UaRadarError):
    pass


class InstanceTooLarge(UaRadarError):
    pass


# -- visual -----------------------------------------------------------------

class DecodeError(UaRadarError):
    pass


# -- backbone / comparison --------------------------------------------------

class ConfigMismatch(UaRadarError):
    pass


class PhaseMismatch(UaRadarError):
    pass


# -- impact -----------------------------------------------------------------

class MissingEvidence(UaRadarError):
    pass


class ArityMismatch(UaRadarError):
    pass


# -- orchestration ----------------------------------------------------------

class IncompleteEntry(UaRadarError):
    pass


class EmptyInput(UaRadarError):
    pass
