# config/settings.py
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Logging
LOG_LEVEL = os.getenv('RAINBOW_LOG_LEVEL', 'INFO').upper()
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Seed from the environment is recorded in diagnostics only; it never
# overrides a config file or a CLI flag.
RAINBOW_SEED = os.getenv('RAINBOW_SEED')

# Bench fan-out
DEFAULT_JOBS = int(os.getenv('RAINBOW_JOBS', '1'))

# Versioned JSON output
SCHEMA_VERSION = 1
