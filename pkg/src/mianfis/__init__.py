"""Multiple-instance Sugeno inference and the MI-ANFIS neuro-fuzzy network.

Bags of instances carry one label each; rules match whole bags through
softmax-aggregated Gaussian memberships and are trained by gradient descent
on the bag-level squared error, optionally with per-rule dropout.
"""

from .bags import Bag, BagDataset, naive_expand, validate_dataset
from .datagen import SynthSpec, generate
from .dataio import load_model, read_bags, save_model, write_bags
from .errors import (DataError, FormatError, InternalError, MiAnfisError,
                     ValidationError)
from .evaluation import (CvResult, DropoutComparison, FoldResult, RocCurve,
                         classify, cross_validate, derive_seed,
                         dropout_comparison, naive_baseline_cv, roc)
from .fuzzy import (SIGMA_MIN, GaussianMf, mf_eval, mf_grad, softmax_agg,
                    softmax_grad)
from .initialization import (FcmResult, InitConfig, PcaMap, fcm, init_model,
                             pca_apply, pca_fit, pca_transform)
from .model import (FIRING_GUARD, ForwardTrace, MiAnfisModel, MiRule, forward,
                    instance_response, predict, truth_instance)
from .training import (Gradients, TrainConfig, TrainReport, bag_gradient,
                       bag_loss, dataset_rmse, finite_difference_gradient,
                       gradient_check, predict_with_dropout_scaling, train)

__version__ = "0.1.0"

__all__ = [
    "Bag", "BagDataset", "naive_expand", "validate_dataset",
    "SynthSpec", "generate",
    "load_model", "read_bags", "save_model", "write_bags",
    "DataError", "FormatError", "InternalError", "MiAnfisError", "ValidationError",
    "CvResult", "DropoutComparison", "FoldResult", "RocCurve", "classify",
    "cross_validate", "derive_seed", "dropout_comparison", "naive_baseline_cv", "roc",
    "SIGMA_MIN", "GaussianMf", "mf_eval", "mf_grad", "softmax_agg", "softmax_grad",
    "FcmResult", "InitConfig", "PcaMap", "fcm", "init_model", "pca_apply",
    "pca_fit", "pca_transform",
    "FIRING_GUARD", "ForwardTrace", "MiAnfisModel", "MiRule", "forward",
    "instance_response", "predict", "truth_instance",
    "Gradients", "TrainConfig", "TrainReport", "bag_gradient", "bag_loss",
    "dataset_rmse", "finite_difference_gradient", "gradient_check",
    "predict_with_dropout_scaling", "train",
    "__version__",
]
