"""Example scenario files shipped with the package (load with ``builtin:<name>``)."""
