"""Lets ``python -m haplan`` reach the command line."""
from .cli import main

if __name__ == "__main__":
    main()
