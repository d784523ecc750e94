class ConfigKeys:
    INPUT_SPECTRUM = "inputs.spectrum"
    INPUT_TRANSMISSION = "inputs.transmission"
    INPUT_ENVELOPE = "inputs.envelope"
    INPUT_DECAY = "inputs.decay"
    INPUT_FREE_SPACE_DECAY = "inputs.free_space_decay"
    INPUT_IRF = "inputs.irf"
    INPUT_LINEWIDTH_TABLE = "inputs.linewidth_table"
    INPUT_SATURATION = "inputs.saturation"
    INPUT_POWER_SERIES = "inputs.power_series"
    INPUT_G_CURVE_ENVELOPE = "inputs.g_curve_envelope"
    INPUT_G_CURVE_DECAY = "inputs.g_curve_decay"
    PHYSICS_KAPPA_UEV = "physics.kappa_uev"
    PHYSICS_SIGMA_VIB_UEV = "physics.sigma_vib_uev"
    PHYSICS_DELTA_UEV = "physics.delta_uev"
    PHYSICS_TAU_FS_PS = "physics.tau_fs_ps"
    PHYSICS_TAU_CAV_PS = "physics.tau_cav_ps"
    PHYSICS_STORAGE_TIME_PS = "physics.storage_time_ps"
    PHYSICS_ETA_QY = "physics.eta_qy"
    PHYSICS_ETA_COL = "physics.eta_col"
    PHYSICS_WAVELENGTH_NM = "physics.wavelength_nm"
    PHYSICS_REFRACTIVE_INDEX = "physics.refractive_index"
    PHYSICS_Q_CAV = "physics.q_cav"
    PHYSICS_Q_EM = "physics.q_em"
    PHYSICS_LAMBDA3_OVER_V = "physics.lambda3_over_v"
    PHYSICS_VOLUME_UM3 = "physics.volume_um3"
    PHYSICS_AMPLITUDE_RATIO = "physics.amplitude_ratio"
    GRID_SIGMA_SD = "grids.sigma_sd"
    GRID_ENERGY = "grids.energy"
    GRID_TIME = "grids.time"
    FIT_MAX_NFEV = "fit.max_nfev"
    FIT_RESTARTS = "fit.restarts"
    SIMULATE_G_UEV = "simulate.g_uev"
    SIMULATE_SIGMA_SD_UEV = "simulate.sigma_sd_uev"
    SIMULATE_LINEWIDTH_UEV = "simulate.linewidth_uev"
    SIMULATE_TOTAL_COUNTS = "simulate.total_counts"
    SIMULATE_IRF_FWHM_PS = "simulate.irf_fwhm_ps"
    RUN_SEED = "run.seed"
    RUN_THREADS = "run.threads"
    RUN_OUT_DIR = "run.out_dir"
    LOG_PATH = "log.path"
    LOG_LEVEL = "log.level"
