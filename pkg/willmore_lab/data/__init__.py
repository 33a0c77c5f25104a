# Data Loading and Result Files
