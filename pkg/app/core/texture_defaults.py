"""Default values for the texture pipeline (filterbank, calibration, tracts, gates)."""

TOOL_NAME: str = "texture-analysis"
TOOL_VERSION: str = "1.0.0"

# Filterbank
DEFAULT_SAMPLE_RATE: int = 44_100
DEFAULT_N_SEG: int = 133
DEFAULT_F_MIN: float = 40.0
DEFAULT_F_MAX: float = 11_025.0
DEFAULT_GAMMA_ORDER: int = 4
DEFAULT_B1: float = 0.707
DEFAULT_C1: float = -3.70
DEFAULT_ERB0: float = 24.7
DEFAULT_ERB1: float = 0.0779
DEFAULT_T_MAX_S: float = 0.4
DEFAULT_DECIMATION_PRE: int = 2
DEFAULT_DECIMATION_POST: int = 50

# White-noise reference (binomial B(20, 0.5) minus 10)
DEFAULT_NOISE_TRIALS: int = 20
DEFAULT_NOISE_P: float = 0.5
DEFAULT_NOISE_OFFSET: int = 10
DEFAULT_NOISE_DURATION_S: float = 200.0
MIN_NOISE_DURATION_S: float = 60.0
DEFAULT_SEED: int = 20_170_101
FLOOR_SEED_OFFSET: int = 1

# Calibration
DEFAULT_THETA: float = 0.2
MAX_FREQ_LAG: int = 20
TIME_LAG_FILTER_MULTIPLE: int = 2
PROFILE_SCHEMA_VERSION: int = 1

# Tracts
DEFAULT_C_P: float = 0.7
DEFAULT_C_T: float = 2.0

# Gates
DEFAULT_GATE_THRESHOLD: float = 8.0
DEFAULT_GATE_SLOPE: float = 2.5
DEFAULT_LOG_BASE: float = 10.0

# Histograms (dB)
CSR_HIST_RANGE: tuple = (-30.0, 30.0, 2.0)
TRACT_HIST_RANGE: tuple = (0.0, 15.0, 0.25)
REFERENCE_SAMPLE_STRIDE: int = 20

# Published |r| (sign) between descriptors and perceptual MDS dimensions.
PUBLISHED_MDS_CORRELATIONS: dict = {
    "energy": {
        "P": {"mds1": -0.74, "mds2": 0.03, "mds3": 0.01},
        "T": {"mds1": 0.71, "mds2": -0.11, "mds3": 0.08},
        "N": {"mds1": 0.14, "mds2": 0.43, "mds3": -0.26},
    },
    "area": {
        "P": {"mds1": -0.55, "mds2": 0.05, "mds3": -0.01},
        "T": {"mds1": 0.75, "mds2": -0.26, "mds3": 0.14},
        "N": {"mds1": -0.34, "mds2": 0.33, "mds3": -0.03},
    },
}

# Published correlations between descriptors of the same weighting.
PUBLISHED_INTERCORRELATIONS: dict = {
    "energy": {("P", "T"): -0.63, ("P", "N"): -0.25, ("T", "N"): 0.20},
    "area": {("P", "T"): -0.59, ("P", "N"): -0.14, ("T", "N"): -0.60},
}
