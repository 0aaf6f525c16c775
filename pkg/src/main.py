"""Main entry point for the modified Kolmogorov toolkit."""

from .cli.main import cli


def main():
    """Main entry point."""
    # Logging is configured by the command group once settings are known
    cli(obj={})


if __name__ == '__main__':
    main()
