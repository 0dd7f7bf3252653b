"""Radar-to-pose toolkit: FMCW simulation, velocity-aware radar maps, and
keypoint-heatmap pose estimation with graph refinement, trained end to end
on a small numpy autodiff core.
"""

from .errors import DataError, NumericalError, RadarPoseError, UsageError
from .fft import ComplexTensor, fft1d, fftshift, ifft1d
from .metrics import OksConfig, average_precision, evaluate_keypoints, mpjpe, oks
from .model import ModelConfig, PoseNet, bce_sum, build_model, load_checkpoint, pose_loss, save_checkpoint
from .optim import Adam, AdamState, adam_step
from .preproc import PreprocConfig, RaeMap, RaMap, VrdaeMap, make_ra, make_rae, make_rdae, make_vrdae
from .radar import AdcCube, RadarConfig, ScatterScene, Target, read_cube, synthesize_frame, write_cube
from .scenes import SCRIPT_NAMES, make_scene, skeleton_scene
from .skeleton import Skeleton2D, SkeletonGraph, adjacency, extract_keypoints, gt_heatmaps
from .tensor import GradTape, Tensor
from .train import TrainSettings, evaluate_model, infer_window, train_model

__version__ = "0.1.0"
