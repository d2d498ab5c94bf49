"""sheetbridge: governed spreadsheets served as versioned web applications."""

__version__ = "0.1.0"
