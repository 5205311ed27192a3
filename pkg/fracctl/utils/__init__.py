from .misc import is_notebook, prep_out_dir
from .logger import Logger, get_logger
from .sampling import InstanceSampler, LinearInstance, RandomLinearInstance, haar_orthogonal
