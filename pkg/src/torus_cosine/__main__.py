import sys

from torus_cosine.cli_app import main

sys.exit(main())
