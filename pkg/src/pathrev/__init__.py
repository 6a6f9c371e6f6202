"""Path reversal on rooted trees and the token algorithm built on it."""

__version__ = "0.1.0"
