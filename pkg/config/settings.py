"""
Application settings and constants
"""
import os
from fractions import Fraction
from pathlib import Path


class Settings:
    """Application settings"""

    # Application name and version
    APP_NAME = "W-Algebra Toolkit"
    APP_VERSION = "0.3.0"

    # Default directories
    DEFAULT_OUTPUT_DIR = "output"

    # Default file paths
    DEFAULT_REPORT_FILE = os.path.join(DEFAULT_OUTPUT_DIR, "verification_report.xlsx")
    DEFAULT_LOG_FILE = os.path.join(DEFAULT_OUTPUT_DIR, "walgebra.log")

    # Truncation: a request needing h_k uses the floor -(k + N + FLOOR_PADDING)
    FLOOR_PADDING = 2
    CONVERGENCE_MARGIN = 2

    # Highest generator index materialized for infinite (V_N^inf) algebras
    INFINITE_INDEX_LIMIT = 2

    # Default highest flow index per hierarchy family
    DEFAULT_KMAX = {
        "scalar-2": 5,
        "scalar-3": 4,
        "kp": 4,
        "matrix": 3,
    }
    FALLBACK_KMAX = 4

    # Verification sweeps
    DEFAULT_JOBS = 1
    ORACLE_SAMPLES = 20
    RANDOM_SEED = 1729

    # Central charge of the named Virasoro-Magri structure
    VIRASORO_CENTRAL_CHARGE = Fraction(1)

    # Output
    DEFAULT_FORMAT = "text"

    @classmethod
    def init_directories(cls):
        """Create default directories if they don't exist"""
        Path(cls.DEFAULT_OUTPUT_DIR).mkdir(exist_ok=True)

    @classmethod
    def default_kmax(cls, N: int, m: int = 1, infinite: bool = False) -> int:
        """Default highest flow index for a hierarchy"""
        if m > 1:
            return cls.DEFAULT_KMAX["matrix"]
        if infinite:
            return cls.DEFAULT_KMAX["kp"]
        return cls.DEFAULT_KMAX.get(f"scalar-{N}", cls.FALLBACK_KMAX)

    @classmethod
    def density_floor(cls, k: int, N: int) -> int:
        """Truncation floor used when a request needs h_k"""
        return -(k + N + cls.FLOOR_PADDING)


# Create a single instance to be imported elsewhere
settings = Settings()
