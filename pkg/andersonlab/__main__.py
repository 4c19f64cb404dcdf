import sys

from andersonlab.cli import main

sys.exit(main())
