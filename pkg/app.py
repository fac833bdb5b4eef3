"""
Seasonal mm-wave path-loss toolkit.

    python app.py simulate --out data/dataset.csv
    python app.py train --data data/dataset.csv --out output/train
    python app.py report --data data/dataset.csv --metrics output/train/metrics.csv
    python app.py pathloss --freq 28 --dist 100 --alpha 0
"""

import sys

from ui.cli import main

if __name__ == "__main__":
    sys.exit(main())
