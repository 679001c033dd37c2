from .learners import (BaseLearnerConfig, GradientBoostedTrees, RidgeRegression, make_learner,
                       learner_from_dict)
from .models import (KINDS, ScoreModel, difference_in_means_cas, fit, predict,
                     transformed_outcome)

__all__ = [
    "BaseLearnerConfig", "GradientBoostedTrees", "RidgeRegression", "make_learner",
    "learner_from_dict", "KINDS", "ScoreModel", "difference_in_means_cas", "fit", "predict",
    "transformed_outcome",
]
