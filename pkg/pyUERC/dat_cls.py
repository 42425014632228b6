#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
data classes for pyUERC

images and masks wrap read-only numpy arrays, everything else follows the property style of the rest of the package
"""

import json
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .const import (
    DEFAULT_SEED,
    SIZE_BIN_LABELS,
    SIZE_BIN_LIMITS,
    UNLABELED,
    Command,
    DescriptorKind,
    Distance,
    FlipMode,
    Gender,
    Occlusion,
    Origin,
    Partition,
    Polarity,
    Rotation,
    Side,
    StratifyField,
)
from .err import UERCDataException, UERCInputException


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def size_bin(pixel_count: int) -> str:
    """label of the image size bin a pixel count falls into"""
    for limit, label in zip(SIZE_BIN_LIMITS, SIZE_BIN_LABELS):
        if pixel_count <= limit:
            return label
    return SIZE_BIN_LABELS[-1]


class GrayImage:
    """gray scale image, row-major intensities in [0, 255]"""

    def __init__(self, data: Union[np.ndarray, Sequence[Sequence[int]]], image_id: str = ""):
        """
        :param data: two dimensional array with shape (height, width)
        :param image_id: optional provenance tag
        """
        self.data = data
        self.image_id = image_id

    def __repr__(self) -> str:
        return "GrayImage(%dx%d, '%s')" % (self.width, self.height, self.image_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self._data, other.data)

    __hash__ = None

    @property
    def data(self) -> np.ndarray:
        """pixel values as read-only uint8 array of shape (height, width)"""
        return self._data

    @data.setter
    def data(self, value):
        array = np.asarray(value)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise UERCInputException("gray image needs a non-empty two dimensional array, got shape %s" % (array.shape,))
        if array.dtype != np.uint8:
            if np.any(array < 0) or np.any(array > 255):
                raise UERCInputException("gray image values have to be in the range [0, 255]")
            array = np.floor(np.asarray(array, dtype=np.float64) + 0.5).astype(np.uint8)
        self._data = _frozen(array.copy())

    @property
    def width(self) -> int:
        """number of columns"""
        return self._data.shape[1]

    @property
    def height(self) -> int:
        """number of rows"""
        return self._data.shape[0]

    @property
    def image_id(self) -> str:
        """id of the image this data was derived from"""
        return self._image_id

    @image_id.setter
    def image_id(self, value: str):
        self._image_id = str(value)


class ColorImage:
    """rgb image with 8 bits per channel"""

    def __init__(self, data: Union[np.ndarray, Sequence], image_id: str = ""):
        """
        :param data: array with shape (height, width, 3)
        :param image_id: optional provenance tag
        """
        self.data = data
        self.image_id = image_id

    def __repr__(self) -> str:
        return "ColorImage(%dx%d, '%s')" % (self.width, self.height, self.image_id)

    @property
    def data(self) -> np.ndarray:
        """pixel values as read-only uint8 array of shape (height, width, 3)"""
        return self._data

    @data.setter
    def data(self, value):
        array = np.asarray(value)
        if array.ndim != 3 or array.shape[2] != 3 or array.shape[0] < 1 or array.shape[1] < 1:
            raise UERCInputException("color image needs an array of shape (height, width, 3), got %s" % (array.shape,))
        if array.dtype != np.uint8:
            if np.any(array < 0) or np.any(array > 255):
                raise UERCInputException("color image values have to be in the range [0, 255]")
            array = np.floor(np.asarray(array, dtype=np.float64) + 0.5).astype(np.uint8)
        self._data = _frozen(array.copy())

    @property
    def width(self) -> int:
        """number of columns"""
        return self._data.shape[1]

    @property
    def height(self) -> int:
        """number of rows"""
        return self._data.shape[0]

    @property
    def image_id(self) -> str:
        """id of the image"""
        return self._image_id

    @image_id.setter
    def image_id(self, value: str):
        self._image_id = str(value)

    @staticmethod
    def filled(width: int, height: int, rgb: Tuple[int, int, int], image_id: str = "") -> "ColorImage":
        """create an image where every pixel has the same color"""
        data = np.empty((height, width, 3), dtype=np.uint8)
        data[:, :] = rgb
        return ColorImage(data, image_id)


class BinaryMask:
    """boolean mask with the dimensions of the image it masks"""

    def __init__(self, data: Union[np.ndarray, Sequence[Sequence[bool]]]):
        self.data = data

    def __repr__(self) -> str:
        return "BinaryMask(%dx%d, %d set)" % (self.width, self.height, self.count())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self._data, other.data)

    __hash__ = None

    @property
    def data(self) -> np.ndarray:
        """read-only bool array of shape (height, width)"""
        return self._data

    @data.setter
    def data(self, value):
        array = np.asarray(value, dtype=bool)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise UERCInputException("mask needs a non-empty two dimensional array, got shape %s" % (array.shape,))
        self._data = _frozen(array.copy())

    @property
    def width(self) -> int:
        """number of columns"""
        return self._data.shape[1]

    @property
    def height(self) -> int:
        """number of rows"""
        return self._data.shape[0]

    def count(self) -> int:
        """number of set pixels"""
        return int(np.count_nonzero(self._data))

    def is_empty(self) -> bool:
        """return ``True`` if no pixel is set"""
        return not self._data.any()

    def is_subset_of(self, other: "BinaryMask") -> bool:
        """return ``True`` if every set pixel is also set in ``other``"""
        return not np.any(self._data & ~other.data)


class DescriptorVector:
    """feature vector together with its provenance"""

    def __init__(self, values, kind: DescriptorKind, source_image_id: str = ""):
        self.kind = kind
        self.values = values
        self.source_image_id = source_image_id

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self) -> str:
        return "DescriptorVector(%s, %d values, '%s')" % (self._kind.value, len(self._values), self._source_image_id)

    @property
    def kind(self) -> DescriptorKind:
        """type of descriptor"""
        return self._kind

    @kind.setter
    def kind(self, value: DescriptorKind):
        self._kind = DescriptorKind(value)

    @property
    def values(self) -> np.ndarray:
        """read-only float64 array"""
        return self._values

    @values.setter
    def values(self, value):
        array = np.asarray(value, dtype=np.float64).ravel()
        if array.size == 0:
            raise UERCInputException("descriptor needs at least one value")
        if self._kind in (DescriptorKind.LBP, DescriptorKind.CHAINLETS) and np.any(array < 0):
            raise UERCInputException("%s descriptor values have to be non-negative" % self._kind.value)
        self._values = _frozen(array.copy())

    @property
    def source_image_id(self) -> str:
        """id of the image the descriptor was computed from"""
        return self._source_image_id

    @source_image_id.setter
    def source_image_id(self, value: str):
        self._source_image_id = str(value)


class ChainCode:
    """freeman chain code of an 8-connected path, 0 = east, counterclockwise"""

    #: column offset per direction code
    DX = (1, 1, 0, -1, -1, -1, 0, 1)
    #: row offset per direction code, rows grow downwards
    DY = (0, -1, -1, -1, 0, 1, 1, 1)

    def __init__(self, start: Tuple[int, int], moves: Sequence[int]):
        """
        :param start: (x, y) pixel coordinate of the first pixel
        :param moves: absolute direction codes
        """
        self.start = start
        self.moves = moves

    def __len__(self) -> int:
        return len(self._moves)

    def __repr__(self) -> str:
        return "ChainCode(%s, %s)" % (self._start, "".join(str(m) for m in self._moves))

    @property
    def start(self) -> Tuple[int, int]:
        """(x, y) coordinate of the first pixel"""
        return self._start

    @start.setter
    def start(self, value: Tuple[int, int]):
        self._start = (int(value[0]), int(value[1]))

    @property
    def moves(self) -> Tuple[int, ...]:
        """absolute direction codes"""
        return self._moves

    @moves.setter
    def moves(self, value: Sequence[int]):
        moves = tuple(int(m) for m in value)
        for move in moves:
            if not 0 <= move <= 7:
                raise UERCInputException("chain code direction %d out of range [0, 7]" % move)
        self._moves = moves

    def path(self) -> List[Tuple[int, int]]:
        """pixel coordinates visited by the chain, including the start"""
        x, y = self._start
        points = [(x, y)]
        for move in self._moves:
            x += self.DX[move]
            y += self.DY[move]
            points.append((x, y))
        return points

    def fits(self, width: int, height: int) -> bool:
        """return ``True`` if the reconstructed path stays inside an image of the given size"""
        return all(0 <= x < width and 0 <= y < height for x, y in self.path())

    def shifted(self, k: int) -> "ChainCode":
        """chain with every absolute direction rotated by ``k`` steps of 45 degrees"""
        return ChainCode(self._start, [(m + k) % 8 for m in self._moves])

    def reversed(self) -> "ChainCode":
        """the same path walked from its last pixel back to the start"""
        return ChainCode(self.path()[-1], [(m + 4) % 8 for m in self._moves[::-1]])


class LbpParams:
    """parameters of the uniform lbp patch descriptor"""

    def __init__(self, patch: int = 16, step: int = 4, radius: int = 2, neighbors: int = 8):
        if neighbors != 8:
            raise UERCInputException("the 59 bin uniform mapping requires 8 neighbors, got %d" % neighbors)
        if radius < 1:
            raise UERCInputException("lbp radius has to be at least 1")
        if patch < 2 * radius + 1:
            raise UERCInputException("patch size %d too small for radius %d" % (patch, radius))
        if step < 1:
            raise UERCInputException("patch step has to be at least 1")
        self.patch = int(patch)
        self.step = int(step)
        self.radius = int(radius)
        self.neighbors = int(neighbors)

    def as_dict(self) -> Dict[str, int]:
        """parameters as dictionary, used for the fingerprint"""
        return {"patch": self.patch, "step": self.step, "radius": self.radius, "neighbors": self.neighbors}


class HogParams:
    """parameters of the hog descriptor"""

    def __init__(self, cell: int = 8, block: int = 2, bins: int = 9):
        if cell < 1 or block < 1 or bins < 1:
            raise UERCInputException("hog cell, block and bins have to be positive")
        self.cell = int(cell)
        self.block = int(block)
        self.bins = int(bins)

    def as_dict(self) -> Dict[str, int]:
        """parameters as dictionary, used for the fingerprint"""
        return {"cell": self.cell, "block": self.block, "bins": self.bins}


class ChainletParams:
    """parameters of the chainlets descriptor"""

    def __init__(self, cell: int = 8, block: int = 2, block_stride: int = 1, bins: int = 8, low: float = 40.0, high: float = 100.0):
        if cell < 1 or block < 1 or block_stride < 1:
            raise UERCInputException("chainlet cell, block and block stride have to be positive")
        if bins != 8:
            raise UERCInputException("relative chain codes have exactly 8 values, got %d bins" % bins)
        if not 0 <= low <= high:
            raise UERCInputException("edge thresholds need 0 <= low <= high, got %s and %s" % (low, high))
        self.cell = int(cell)
        self.block = int(block)
        self.block_stride = int(block_stride)
        self.bins = int(bins)
        self.low = float(low)
        self.high = float(high)

    def as_dict(self) -> Dict[str, Union[int, float]]:
        """parameters as dictionary, used for the fingerprint"""
        return {
            "cell": self.cell,
            "block": self.block,
            "block_stride": self.block_stride,
            "bins": self.bins,
            "low": self.low,
            "high": self.high,
        }


class ManifestEntry:
    """one image of the dataset manifest"""

    def __init__(self):
        """init with default values"""
        self.image_id = ""
        self.subject_id = ""
        self.side = Side.UNKNOWN
        self.origin = Origin.UERC_NEW
        self.partition = Partition.TEST
        self.pitch = Rotation.UNLABELED
        self.roll = Rotation.UNLABELED
        self.yaw = Rotation.UNLABELED
        self.occlusion = Occlusion.UNLABELED
        self.gender = Gender.UNLABELED
        self.pixel_count = 1
        self.path = ""

    def __repr__(self) -> str:
        return "ManifestEntry('%s', subject '%s', %s, %s)" % (self.image_id, self.subject_id, self.origin.value, self.partition.value)

    @property
    def side(self) -> Side:
        """side of the head"""
        return self._side

    @side.setter
    def side(self, value):
        self._side = Side(value)

    @property
    def origin(self) -> Origin:
        """source dataset"""
        return self._origin

    @origin.setter
    def origin(self, value):
        self._origin = Origin(value)

    @property
    def partition(self) -> Partition:
        """train or test"""
        return self._partition

    @partition.setter
    def partition(self, value):
        self._partition = Partition(value)

    @property
    def pitch(self) -> Rotation:
        """head rotation around the pitch axis"""
        return self._pitch

    @pitch.setter
    def pitch(self, value):
        self._pitch = Rotation(value)

    @property
    def roll(self) -> Rotation:
        """head rotation around the roll axis"""
        return self._roll

    @roll.setter
    def roll(self, value):
        self._roll = Rotation(value)

    @property
    def yaw(self) -> Rotation:
        """head rotation around the yaw axis"""
        return self._yaw

    @yaw.setter
    def yaw(self, value):
        self._yaw = Rotation(value)

    @property
    def occlusion(self) -> Occlusion:
        """extent of occlusion"""
        return self._occlusion

    @occlusion.setter
    def occlusion(self, value):
        self._occlusion = Occlusion(value)

    @property
    def gender(self) -> Gender:
        """gender of the subject"""
        return self._gender

    @gender.setter
    def gender(self, value):
        self._gender = Gender(value)

    @property
    def pixel_count(self) -> int:
        """number of pixels of the original image"""
        return self._pixel_count

    @pixel_count.setter
    def pixel_count(self, value):
        value = int(value)
        if value < 1:
            raise UERCDataException("pixel count has to be at least 1, got %d" % value)
        self._pixel_count = value

    def annotation(self, field: StratifyField) -> str:
        """value of an annotation field as string, size bins are derived from the pixel count"""
        if field is StratifyField.SIZE_BIN:
            return size_bin(self._pixel_count)
        return getattr(self, field.value).value

    def is_annotated(self) -> bool:
        """return ``True`` if any of the annotation fields carries a label"""
        return any(
            getattr(self, name).value != UNLABELED for name in ("pitch", "roll", "yaw", "occlusion", "gender")
        )


class SimilarityMatrix:
    """probes x galleries grid of similarity scores"""

    def __init__(self, probe_ids: Sequence[str], gallery_ids: Sequence[str], scores):
        """
        :param probe_ids: ordered ids of the rows
        :param gallery_ids: ordered ids of the columns
        :param scores: array like of shape (len(probe_ids), len(gallery_ids)), stored as float32

        :raises UERCDataException: on shape mismatch or non-finite scores
        """
        self._probe_ids = tuple(str(p) for p in probe_ids)
        self._gallery_ids = tuple(str(g) for g in gallery_ids)
        grid = np.asarray(scores, dtype=np.float32)
        if grid.size == 0:
            grid = grid.reshape((len(self._probe_ids), len(self._gallery_ids)))
        if grid.shape != (len(self._probe_ids), len(self._gallery_ids)):
            raise UERCDataException(
                "score grid of shape %s does not match %d probes and %d galleries"
                % (grid.shape, len(self._probe_ids), len(self._gallery_ids))
            )
        if not np.all(np.isfinite(grid)):
            raise UERCDataException("similarity matrix contains non-finite scores")
        self._scores = _frozen(grid.copy())
        self._probe_index = None
        self._gallery_index = None

    def __repr__(self) -> str:
        return "SimilarityMatrix(%d x %d)" % self.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimilarityMatrix):
            return NotImplemented
        return (
            self._probe_ids == other.probe_ids
            and self._gallery_ids == other.gallery_ids
            and self._scores.tobytes() == other.scores.tobytes()
        )

    __hash__ = None

    @property
    def probe_ids(self) -> Tuple[str, ...]:
        """ids of the rows"""
        return self._probe_ids

    @property
    def gallery_ids(self) -> Tuple[str, ...]:
        """ids of the columns"""
        return self._gallery_ids

    @property
    def scores(self) -> np.ndarray:
        """read-only float32 grid, row-major"""
        return self._scores

    @property
    def shape(self) -> Tuple[int, int]:
        """(number of probes, number of galleries)"""
        return (len(self._probe_ids), len(self._gallery_ids))

    @property
    def polarity(self) -> Polarity:
        """matrices only ever store similarities"""
        return Polarity.SIMILARITY

    def probe_index(self) -> Dict[str, int]:
        """row index of each probe id"""
        if self._probe_index is None:
            self._probe_index = {p: i for i, p in enumerate(self._probe_ids)}
        return self._probe_index

    def gallery_index(self) -> Dict[str, int]:
        """column index of each gallery id"""
        if self._gallery_index is None:
            self._gallery_index = {g: i for i, g in enumerate(self._gallery_ids)}
        return self._gallery_index


class MatchScore:
    """a single comparison result with explicit polarity"""

    def __init__(self, value: float, polarity: Polarity):
        self.value = float(value)
        self.polarity = Polarity(polarity)

    def __repr__(self) -> str:
        return "MatchScore(%g, %s)" % (self.value, self.polarity.value)


class SideModel:
    """linear left/right classifier on hog features, +1 means right ear"""

    def __init__(self, weights, bias: float):
        array = np.asarray(weights, dtype=np.float64).ravel()
        if array.size == 0:
            raise UERCInputException("side model needs at least one weight")
        self._weights = _frozen(array.copy())
        self._bias = float(bias)

    @property
    def weights(self) -> np.ndarray:
        """read-only weight vector"""
        return self._weights

    @property
    def bias(self) -> float:
        """offset of the decision function"""
        return self._bias

    @property
    def feature_length(self) -> int:
        """length of the hog feature vector the model expects"""
        return self._weights.size


class CmcCurve:
    """identification rate as a function of rank, values[r - 1] is the rate at rank r"""

    def __init__(self, values):
        array = np.asarray(values, dtype=np.float64).ravel()
        if array.size == 0:
            raise UERCInputException("cmc curve needs at least one rank")
        if np.any(array < 0) or np.any(array > 1) or np.any(np.diff(array) < 0):
            raise UERCDataException("cmc values have to be non-decreasing and within [0, 1]")
        self._values = _frozen(array.copy())

    def __len__(self) -> int:
        return self._values.size

    def __repr__(self) -> str:
        return "CmcCurve(max_rank=%d, rank1=%.4f)" % (self.max_rank, self._values[0])

    @property
    def values(self) -> np.ndarray:
        """identification rates per rank"""
        return self._values

    @property
    def max_rank(self) -> int:
        """number of distinct gallery identities"""
        return self._values.size


class EvalReport:
    """scalar summary of a cmc evaluation"""

    def __init__(self, curve: CmcCurve, rank1: float, rank5: float, auc: float, n_probes: int, n_gallery_identities: int):
        if rank1 > rank5:
            raise UERCDataException("rank-1 %f exceeds rank-5 %f" % (rank1, rank5))
        self.curve = curve
        self.rank1 = float(rank1)
        self.rank5 = float(rank5)
        self.auc = float(auc)
        self.n_probes = int(n_probes)
        self.n_gallery_identities = int(n_gallery_identities)
        self.n_distractor_identities = 0
        self.stratum: Optional[str] = None

    def __repr__(self) -> str:
        return "EvalReport(%s rank1=%.2f rank5=%.2f auc=%.4f probes=%d)" % (
            self.stratum or "all",
            self.rank1,
            self.rank5,
            self.auc,
            self.n_probes,
        )

    def as_row(self) -> Dict[str, str]:
        """report as table row"""
        return {
            "stratum": self.stratum or "all",
            "rank1": "%.4f" % self.rank1,
            "rank5": "%.4f" % self.rank5,
            "auc": "%.6f" % self.auc,
            "n_probes": str(self.n_probes),
            "n_gallery_identities": str(self.n_gallery_identities),
            "n_distractor_identities": str(self.n_distractor_identities),
        }


class ResampleResult:
    """rank-1 rates of the single gallery image experiment"""

    def __init__(self, rank1: Sequence[float], n_probes: Sequence[int]):
        self.rank1 = [float(r) for r in rank1]
        self.n_probes = [int(n) for n in n_probes]

    @property
    def summary(self) -> Tuple[float, float, float, float, float]:
        """five number summary (min, first quartile, median, third quartile, max)"""
        values = np.asarray(self.rank1, dtype=np.float64)
        quartiles = np.percentile(values, [25, 50, 75])
        return (float(values.min()), float(quartiles[0]), float(quartiles[1]), float(quartiles[2]), float(values.max()))


class QualitativeRow:
    """top matches of a single probe"""

    def __init__(self, probe_id: str, subject_id: str, top_ids: Sequence[str], top_subjects: Sequence[str], correct_id: str, rank: int):
        self.probe_id = probe_id
        self.subject_id = subject_id
        self.top_ids = list(top_ids)
        self.top_subjects = list(top_subjects)
        self.correct_id = correct_id
        self.rank = int(rank)

    def as_row(self) -> Dict[str, str]:
        """row for the report table"""
        row = {"probe_id": self.probe_id, "subject_id": self.subject_id}
        for i, (gallery_id, subject_id) in enumerate(zip(self.top_ids, self.top_subjects)):
            row["match_%d" % (i + 1)] = gallery_id
            row["match_%d_subject" % (i + 1)] = subject_id
        row["correct_id"] = self.correct_id
        row["rank"] = str(self.rank)
        return row


class RunConfig:
    """configuration of a command line run"""

    def __init__(self):
        """init with default values"""
        self.command = Command.EVAL
        self.manifest = ""
        self.images_root = ""
        self.descriptor = DescriptorKind.LBP
        self.descriptors: List[str] = []
        self.distance: List[Distance] = []
        self.flip = FlipMode.OFF
        self.matrix = ""
        self.out = ""
        self.seed = DEFAULT_SEED
        self.threads = 1
        self.stratify_field = StratifyField.SIZE_BIN
        self.runs = 10
        self.top_k = 2
        self.origin: Optional[Origin] = None
        self.exclude_self = True
        self.csv = False

    @property
    def command(self) -> Command:
        """command to run"""
        return self._command

    @command.setter
    def command(self, value):
        self._command = Command(value)

    @property
    def descriptor(self) -> DescriptorKind:
        """descriptor type"""
        return self._descriptor

    @descriptor.setter
    def descriptor(self, value):
        self._descriptor = DescriptorKind(value)

    @property
    def distance(self) -> List[Distance]:
        """comparison function per descriptor file, files without one use the default of their descriptor"""
        return self._distance

    @distance.setter
    def distance(self, value):
        if value is None:
            value = []
        elif isinstance(value, (str, Distance)):
            value = [value]
        self._distance = [Distance(v) for v in value]

    @property
    def flip(self) -> FlipMode:
        """handling of left and right ears"""
        return self._flip

    @flip.setter
    def flip(self, value):
        self._flip = FlipMode(value)

    @property
    def seed(self) -> int:
        """seed for all random decisions"""
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = int(value)

    @property
    def threads(self) -> int:
        """number of worker threads"""
        return self._threads

    @threads.setter
    def threads(self, value):
        value = int(value)
        if value < 1:
            raise UERCInputException("thread count has to be at least 1, got %d" % value)
        self._threads = value

    @property
    def stratify_field(self) -> StratifyField:
        """manifest field used by the stratify command"""
        return self._stratify_field

    @stratify_field.setter
    def stratify_field(self, value):
        self._stratify_field = StratifyField(value)

    @property
    def runs(self) -> int:
        """number of runs of the resample command"""
        return self._runs

    @runs.setter
    def runs(self, value):
        value = int(value)
        if value < 1:
            raise UERCInputException("number of runs has to be at least 1, got %d" % value)
        self._runs = value

    @property
    def top_k(self) -> int:
        """number of matches listed by the report command"""
        return self._top_k

    @top_k.setter
    def top_k(self, value):
        value = int(value)
        if value < 1:
            raise UERCInputException("top-k has to be at least 1, got %d" % value)
        self._top_k = value

    @property
    def origin(self) -> Optional[Origin]:
        """restrict evaluation to images of one origin"""
        return self._origin

    @origin.setter
    def origin(self, value):
        self._origin = None if value is None else Origin(value)

    def update(self, values: dict):
        """set every known key of ``values``, ``None`` values are ignored"""
        for key, value in values.items():
            if value is None:
                continue
            if not hasattr(self, key):
                raise UERCInputException("unknown configuration key '%s'" % key)
            try:
                setattr(self, key, value)
            except (TypeError, ValueError) as ex:
                raise UERCInputException("invalid value %r for '%s'" % (value, key)) from ex

    def as_json(self) -> str:
        """configuration as json string, used for logging"""
        values = {}
        for key in sorted(vars(self)):
            name = key.lstrip("_")
            value = getattr(self, name)
            if hasattr(value, "value"):
                value = value.value
            values[name] = value
        return json.dumps(values, sort_keys=True)
