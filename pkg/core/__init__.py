# Core package - RCP toolkit numerics
