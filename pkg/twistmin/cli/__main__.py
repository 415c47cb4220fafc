# cli/__main__.py
import sys

from .runner import main

sys.exit(main())
