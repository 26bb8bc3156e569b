import sys
from pathlib import Path

# make helpers.py / reference.py importable no matter where pytest runs from
sys.path.insert(0, str(Path(__file__).parent))
