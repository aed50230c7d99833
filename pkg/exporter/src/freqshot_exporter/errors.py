class ExporterError(Exception):
    exit_code = 3


class BackboneUnavailable(ExporterError):
    exit_code = 4


class DecodeFailure(ExporterError): ...


class ShapeMismatch(ExporterError): ...


class UsageError(ExporterError):
    exit_code = 2
