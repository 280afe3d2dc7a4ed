"""Front-running protection by threshold-encrypting transactions until finality.

Senders encrypt each transaction under a symmetric key that a committee of
trustees holds in threshold-shared form (TDH2 against a long-lived committee
key, or a fresh PVSS deal per transaction).  Trustees release their shares
only once the transaction is final, so its contents cannot influence ordering.
"""

__version__ = "0.1.0"
