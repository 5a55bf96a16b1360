import sys

from gradinspect.cli import main

sys.exit(main())
