# Core Geometry and Solver Modules
