"""Distribution laws, autoregressive models and the temperature/humidity perceptron."""

from .ar import ARModel, NormalScore, fit_ar, levinson_durbin, normal_score, sample_acovf, simulate_ar
from .laws import ClearnessLaw, WeibullLaw, fit_clearness_law, fit_weibull, law_from_dict
from .mlp import MlpModel, MlpSpec, fit_mlp, predict_mlp, train_mlp


def model_from_dict(d):
    kind = d.get("kind")
    if kind == "ar":
        return ARModel.from_dict(d)
    if kind == "mlp":
        return MlpModel.from_dict(d)
    return law_from_dict(d)


__all__ = [
    "ARModel", "ClearnessLaw", "MlpModel", "MlpSpec", "NormalScore", "WeibullLaw",
    "fit_ar", "fit_clearness_law", "fit_mlp", "fit_weibull", "law_from_dict", "levinson_durbin",
    "model_from_dict", "normal_score", "predict_mlp", "sample_acovf", "simulate_ar", "train_mlp",
]
