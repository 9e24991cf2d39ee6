# Configuration, error types, logging and plotting helpers
