# Configuration and Validation
