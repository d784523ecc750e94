HBAR_UEV_NS = 0.6582119569
HC_UEV_NM = 1.23984198e9
FWHM_PER_SIGMA = 2.3548200450309493

VOIGT_MIN_POINTS = 4001
VOIGT_EXTENT_WIDTHS = 25.0

DIRECT_CONVOLUTION_MAX = 512

GAUSS_HERMITE_ORDER = 41
GAUSSIAN_SPAN_SIGMAS = 6.0
GAUSSIAN_STEP_PER_WIDTH = 0.25

MARGINAL_SPAN_WIDTHS = 25.0

TIME_STEP_NS = 0.004
TIME_SPAN_BEFORE_NS = 0.5
TIME_SPAN_AFTER_NS = 5.0

DIP_REFINE_HALF_WINDOW = 5

SIGMA_SD_GRID_START_UEV = 0.0
SIGMA_SD_GRID_STOP_UEV = 150.0
SIGMA_SD_GRID_STEP_UEV = 5.0

FIT_MAX_NFEV = 2000
FIT_RESTARTS = 2
MONOTONE_SLACK = 0.02

EFFECTIVE_EXP_SCAN_POINTS = 257
EFFECTIVE_EXP_MAX_ITER = 200

EXIT_OK = 0
EXIT_FIT_NON_CONVERGENCE = 1
EXIT_INPUT_ERROR = 2
EXIT_CONFIG_ERROR = 3
EXIT_INTERRUPTED = 130
