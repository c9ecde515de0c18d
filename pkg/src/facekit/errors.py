"""Exception hierarchy shared by every facekit stage."""


class FacekitError(Exception):
    """Base class for all facekit failures."""


# image codecs and raster plumbing
class ImageFormatError(FacekitError, ValueError):
    pass


class MalformedHeader(ImageFormatError):
    pass


class TruncatedPixelData(ImageFormatError):
    pass


class UnsupportedMaxval(ImageFormatError):
    pass


class ZeroDimension(FacekitError, ValueError):
    pass


# detection
class DegenerateChannel(FacekitError, ValueError):
    """Channel has no spread, so no threshold can split it."""


class NoFaceFound(FacekitError):
    pass


# wavelet
class OddLength(FacekitError, ValueError):
    pass


class LengthMismatch(FacekitError, ValueError):
    pass


class OddDimension(FacekitError, ValueError):
    pass


class DimMismatch(FacekitError, ValueError):
    pass


class NotDivisible(FacekitError, ValueError):
    pass


# recognition
class EmptyImage(FacekitError, ValueError):
    pass


class BlackImage(FacekitError, ValueError):
    pass


class WrongDimensions(FacekitError, ValueError):
    pass


class BadLevel(FacekitError, ValueError):
    pass


class LevelMismatch(FacekitError, ValueError):
    pass


class EmptyGallery(FacekitError, ValueError):
    pass


class EmptyEnrollment(FacekitError, ValueError):
    pass


class GalleryFormatError(FacekitError, ValueError):
    pass


# evaluation
class DatasetError(FacekitError):
    pass


class EmptyReport(FacekitError, ValueError):
    pass
