"""Exception hierarchy shared by every stage."""


class ThemeforgeError(Exception):
    """Base class for all errors raised by themeforge."""


class ConfigurationError(ThemeforgeError):
    """Bad configuration; ``errors`` lists every problem found."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors) if errors else [str(message)]


class ParameterError(ThemeforgeError, ValueError):
    pass


class ValidationError(ThemeforgeError, ValueError):
    pass


class NotFoundError(ThemeforgeError):
    def __init__(self, report_id, detail=""):
        self.report_id = report_id
        msg = f"report {report_id} not found"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class TransportError(ThemeforgeError):
    """Network failure; the request may succeed if retried."""

    retryable = True


class EmptyCorpusError(ThemeforgeError):
    pass


class EmptyVocabularyError(ThemeforgeError):
    pass


class EmptyInputError(ThemeforgeError, ValueError):
    pass


class AlignmentError(ThemeforgeError):
    pass


class EmptyClassesError(ThemeforgeError):
    pass


class InsufficientTopicsError(ThemeforgeError):
    pass
