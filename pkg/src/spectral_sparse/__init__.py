from .linalg import *
from .thresholding import *
from .recovery import *
from .iterative import *
from .problems import *
from .tuning import *
from .archive import *
from .results import *
from .config import *
from .experiments import *
