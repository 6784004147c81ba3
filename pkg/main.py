#!/usr/bin/env python3
"""
bellbound - Main entry point
"""

import sys
from src.cli.commands import run

def main(argv=None):
    """Main application entry point"""
    return run(argv)

if __name__ == "__main__":
    sys.exit(main())
