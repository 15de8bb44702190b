import sys
from pathlib import Path

# Tests import the top-level packages (core, tools, runner) and cli directly
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
