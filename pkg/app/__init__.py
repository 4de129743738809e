"""reeb-strip: Reeb pre-digraphs and GDNFs of planar strip regions."""

__version__ = "0.1.0"
