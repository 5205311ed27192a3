from .functions import (
    ML_ABS_TOL,
    MlQuery,
    beta,
    gamma,
    mittag_leffler,
    mittag_leffler_array,
)
