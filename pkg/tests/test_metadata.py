from importlib import metadata


def test_metadata():
    metadata_name = "mrpchan"
    assert metadata.version(metadata_name)
    assert metadata.metadata(metadata_name)["Name"] == metadata_name


def test_package_import():
    import mrpchan

    assert mrpchan
