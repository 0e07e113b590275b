"""Grid containers and discrete operators shared by every solver layer."""
