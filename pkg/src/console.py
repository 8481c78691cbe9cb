"""
Colored console reporter for the command line.
"""
from typing import Dict, Iterable

from colorama import init, Fore, Style

from config.settings import CLI_COLORS
from config.experiment_config import ExperimentConfig, get_algorithm_description


class ConsoleReporter:
    """
    Prints experiment progress and results in color.
    """

    def __init__(self, colors: Dict[str, str] = None):
        # Initialize colorama for cross-platform colored output
        init()
        names = colors or CLI_COLORS
        self.colors = {role: getattr(Fore, name.upper(), Fore.WHITE) for role, name in names.items()}

    def _print_colored(self, text: str, color: str) -> None:
        """
        Print text in the specified color.

        Args:
            text: The text to print.
            color: The colorama color code.
        """
        print(f"{color}{text}{Style.RESET_ALL}")

    def banner(self, config: ExperimentConfig) -> None:
        self._print_colored(f"=== {config.benchmark}: {config.runs} runs x "
                            f"{len(config.algorithms)} algorithms, budget {config.budget} ===",
                            self.colors["banner"])
        for tag in config.algorithms:
            self._print_colored(f"  {tag:<8} {get_algorithm_description(tag)}", self.colors["info"])

    def progress(self, text: str) -> None:
        self._print_colored(text, self.colors["progress"])

    def success(self, text: str) -> None:
        self._print_colored(text, self.colors["success"])

    def error(self, text: str) -> None:
        self._print_colored(f"Error: {text}", self.colors["error"])

    def files(self, paths: Iterable[str]) -> None:
        """List written files."""
        for path in paths:
            self._print_colored(f"  wrote {path}", self.colors["info"])
