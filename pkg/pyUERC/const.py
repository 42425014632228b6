#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Constant values used in pyUERC"""
from enum import Enum

#: magic bytes at the start of a similarity matrix file
MATRIX_MAGIC = b"UERCSIM1"

#: magic bytes at the start of a descriptor file
DESCRIPTOR_MAGIC = b"UERCDSC1"

#: suffix appended to the image id of a horizontally flipped image
FLIP_SUFFIX = "#flipped"

#: token used in the manifest for missing annotations
UNLABELED = "unlabeled"

#: columns of the manifest csv, in this order
MANIFEST_COLUMNS = (
    "image_id",
    "subject_id",
    "side",
    "origin",
    "partition",
    "pitch",
    "roll",
    "yaw",
    "occlusion",
    "gender",
    "pixel_count",
    "path",
)

#: image size (width, height) every image is resized to before lbp and chainlets extraction
PIPELINE_SIZE = (100, 100)

#: image size (width, height) used for hog features of the side classifier
HOG_SIZE = (30, 60)

#: epsilon of the L2 block normalization of hog and chainlets
BLOCK_EPS = 1e-6

#: epsilon in the denominator of the chi-square distance
CHI_SQUARE_EPS = 1e-10

#: default seed, all randomness is derived from it
DEFAULT_SEED = 42

#: environment variable holding the default number of worker threads
THREADS_ENV = "UERC_THREADS"

#: upper bounds of the image size bins in pixels, the last bin is open
SIZE_BIN_LIMITS = (1000, 5000, 10000)

#: labels of the image size bins
SIZE_BIN_LABELS = ("<=1000", "1000-5000", "5000-10000", ">10000")

#: image and subject counts of the UERC partitions as (images, subjects)
UERC_PARTITION_TOTALS = {
    "train": (2304, 166),
    "test": (9500, 3540),
}

#: image and subject counts of the whole UERC dataset
UERC_DATASET_TOTALS = (11804, 3706)


class Side(str, Enum):
    """Enum for the side of the head an ear belongs to"""

    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"


class Origin(str, Enum):
    """Enum for the source dataset of an image"""

    AWE = "awe"
    """annotated part of the data, 10 images per subject"""

    AWE_AUX = "awe_aux"
    """auxiliary dataset, variable number of images per subject"""

    UERC_NEW = "uerc_new"
    """newly collected images, variable number of images per subject"""


class Partition(str, Enum):
    """Enum for the data partitions"""

    TRAIN = "train"
    TEST = "test"


class Rotation(str, Enum):
    """Enum for the extent of head rotation along pitch, roll or yaw"""

    NONE = "none"
    MODERATE = "moderate"
    SEVERE = "severe"
    UNLABELED = UNLABELED


class Occlusion(str, Enum):
    """Enum for the extent of ear occlusion"""

    MINOR = "minor"
    MODERATE = "moderate"
    SEVERE = "severe"
    UNLABELED = UNLABELED


class Gender(str, Enum):
    """Enum for the gender annotation"""

    MALE = "male"
    FEMALE = "female"
    UNLABELED = UNLABELED


class DescriptorKind(str, Enum):
    """Enum for the descriptor types"""

    LBP = "lbp"
    """uniform local binary pattern histograms over overlapping patches"""

    HOG = "hog"
    """histogram of oriented gradients"""

    CHAINLETS = "chainlets"
    """block normalized histograms of relative chain codes"""

    EXTERNAL = "external"
    """descriptor computed outside of this package, e.g. by a deep model"""


class Polarity(str, Enum):
    """Enum for the interpretation of a match score"""

    SIMILARITY = "similarity"
    """higher is better"""

    DISTANCE = "distance"
    """lower is better"""


class Distance(str, Enum):
    """Enum for the available comparison functions"""

    COSINE = "cosine"
    CHISQ = "chisq"
    L2 = "l2"


class FlipMode(str, Enum):
    """Enum for the handling of left and right ears"""

    OFF = "off"
    """compare images as they are"""

    SUM = "sum"
    """score the probe and its flipped version and sum the z-scored rows"""

    CLASSIFIER = "classifier"
    """flip every image predicted as left ear before extraction"""


class Command(str, Enum):
    """Enum for the commands of the command line interface"""

    EXTRACT = "extract"
    SCORE = "score"
    EVAL = "eval"
    STRATIFY = "stratify"
    RESAMPLE = "resample"
    SIDES = "sides"
    REPORT = "report"


class StratifyField(str, Enum):
    """Enum for the manifest fields a stratified evaluation can split on"""

    PITCH = "pitch"
    ROLL = "roll"
    YAW = "yaw"
    OCCLUSION = "occlusion"
    GENDER = "gender"
    SIZE_BIN = "size_bin"


#: distance used by each descriptor kind unless configured otherwise
DEFAULT_DISTANCE = {
    DescriptorKind.LBP: Distance.COSINE,
    DescriptorKind.HOG: Distance.L2,
    DescriptorKind.CHAINLETS: Distance.CHISQ,
    DescriptorKind.EXTERNAL: Distance.COSINE,
}

#: polarity of each comparison function
DISTANCE_POLARITY = {
    Distance.COSINE: Polarity.SIMILARITY,
    Distance.CHISQ: Polarity.DISTANCE,
    Distance.L2: Polarity.DISTANCE,
}

#: named pipelines, each a set of RunConfig values
METHOD_PRESETS = {
    "lbp-baseline": {"descriptor": DescriptorKind.LBP, "distance": Distance.COSINE, "flip": FlipMode.OFF},
    "chainlets": {"descriptor": DescriptorKind.CHAINLETS, "distance": Distance.CHISQ, "flip": FlipMode.OFF},
    "flip-sum": {"descriptor": DescriptorKind.EXTERNAL, "flip": FlipMode.SUM},
    "lbp-external-ensemble": {"descriptor": DescriptorKind.LBP, "flip": FlipMode.SUM},
    "side-classifier": {"descriptor": DescriptorKind.LBP, "distance": Distance.COSINE, "flip": FlipMode.CLASSIFIER},
}
