from abc import ABC, abstractmethod
from typing import Any, List


class ParserInterface(ABC):
    """Abstract base class for readers of exported algebra documents"""

    @abstractmethod
    def parse_file(self, file_path: str) -> Any:
        """
        Parse a file and return the decoded value.

        Args:
            file_path: Path to the file to parse

        Returns:
            Decoded value (DiffPoly, LambdaValue, FlowEquation, ...)
        """
        pass

    @abstractmethod
    def parse_files(self, file_paths: List[str]) -> List[Any]:
        """
        Parse multiple files.

        Args:
            file_paths: List of paths to the files to parse

        Returns:
            Decoded values in file order
        """
        pass

    @abstractmethod
    def parse_data(self, data: Any) -> Any:
        """
        Decode data already in memory.

        Args:
            data: A JSON document (text or the loaded object)

        Returns:
            Decoded value
        """
        pass
