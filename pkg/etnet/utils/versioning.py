from typing import Optional

import semver

from .errors import ModelFormatError
from .logging import log_event

FORMAT_VERSION = "1.0.0"


class VersionManager:
    def __init__(
        self,
        current_version: str = FORMAT_VERSION,
        min_version: str = "1.0.0",
        max_version: str = "2.0.0",
    ):
        """
        Initialize version manager

        Args:
            current_version: Format version written by this release
            min_version: Minimum readable version
            max_version: First unreadable version (exclusive)
        """
        self.current_version = semver.VersionInfo.parse(current_version)
        self.min_version = semver.VersionInfo.parse(min_version)
        self.max_version = semver.VersionInfo.parse(max_version)

    def parse_version(self, version_str: str) -> Optional[semver.VersionInfo]:
        """Parse version string into semver object"""
        try:
            # Handle v prefix
            if version_str.startswith("v"):
                version_str = version_str[1:]

            return semver.VersionInfo.parse(version_str)
        except (TypeError, ValueError):
            return None

    def is_version_supported(self, version: semver.VersionInfo) -> bool:
        """Check if version is supported"""
        if not self.min_version <= version < self.max_version:
            return False
        # newer minor revisions may carry fields this release cannot read
        return version.minor <= self.current_version.minor

    def check(self, version_str: str) -> semver.VersionInfo:
        """Validate a document's format version or raise ModelFormatError"""
        version = self.parse_version(str(version_str))
        if version is None:
            raise ModelFormatError(
                f"Invalid format_version {version_str!r}",
                {"format_version": version_str},
            )

        if not self.is_version_supported(version):
            log_event(
                "format_version_rejected",
                {"found": str(version), "current": str(self.current_version)},
            )
            raise ModelFormatError(
                f"Unsupported format_version {version}; "
                f"this release reads {self.min_version} up to {self.current_version}",
                {
                    "format_version": str(version),
                    "supported_min": str(self.min_version),
                    "supported_current": str(self.current_version),
                },
            )

        return version


default_versions = VersionManager()
