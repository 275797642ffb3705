import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    APP_ENV: str = os.getenv("APP_ENV", "dev")
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    OUTPUT_ROOT: str = os.getenv("GLOBMIX_OUTPUT_ROOT", "runs")
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", 20180501))
    DEFAULT_WORKERS: int = int(os.getenv("DEFAULT_WORKERS", 1))
    ENSEMBLE_CHUNK: int = int(os.getenv("ENSEMBLE_CHUNK", 256))
    BATCH_COUNT: int = int(os.getenv("BATCH_COUNT", 32))
    SE_BAND: float = float(os.getenv("SE_BAND", 4.0))
    MU_SAMPLE_BUDGET: int = int(os.getenv("MU_SAMPLE_BUDGET", 1_000_000))
    GRAZING_TOLERANCE: float = float(os.getenv("GRAZING_TOLERANCE", 1e-8))
    RELATIVE_DEVIATION_THRESHOLD: float = float(os.getenv("RELATIVE_DEVIATION_THRESHOLD", 0.1))
    RESOLVED_DENSITY_FRACTION: float = float(os.getenv("RESOLVED_DENSITY_FRACTION", 0.01))
    ROOT_GRID_PER_UNIT: int = int(os.getenv("ROOT_GRID_PER_UNIT", 64))
    FIELD_STEP_BUDGET: int = int(os.getenv("FIELD_STEP_BUDGET", 200_000))

settings = Settings()
