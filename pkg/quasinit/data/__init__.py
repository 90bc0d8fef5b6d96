import json
import logging
import os
import shutil
from enum import IntEnum
from hashlib import sha256
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

data_root = Path(os.path.dirname(__file__))
config = data_root / 'config.json'
directions = data_root / 'directions'


def _get_checksum(__fp_iter: Iterable[str]) -> str:
    return sha256(';'.join(sorted(__fp_iter)).encode()).hexdigest()


def _is_direction_file(__fp: str):
    return not __fp.startswith('.') and not __fp.endswith(('.py', '.json', '.md'))


def _member_name(stem: str) -> str:
    return ''.join(c if c.isalnum() else '_' for c in stem).upper()


def _listing() -> dict[str, str]:
    return {
        _member_name(fp): str((directions / fp).relative_to(data_root))
        for fp in sorted(filter(_is_direction_file, os.listdir(directions)))
    }


def _build_config():
    d = {'directions': _listing(), '__hash__': ''}
    d['__hash__'] = _get_checksum(d['directions'].values())
    try:
        with config.open('w', encoding='utf-8') as f:
            json.dump(d, f, indent='\t')
    except OSError as err:
        # read-only installs keep the registry in memory
        logger.debug("could not write %s: %s", config, err)
    return d


def _validate(**kwargs):
    if kwargs.get('rebuild', False) or not config.exists():
        return _build_config()['directions']
    try:
        json_data = json.loads(config.read_text(encoding='utf-8'))
    except (OSError, ValueError):
        return _build_config()['directions']
    if json_data.get('__hash__') != _get_checksum(_listing().values()):
        json_data = _build_config()
    return json_data['directions']


_direction_data_ = _validate()


def _create_direction_enum() -> type['DirectionFile']:
    def path(self):
        return data_root / Path(_direction_data_[self.name])

    enum_cls = IntEnum(
        'DirectionFile', {k: i for (i, k) in enumerate(sorted(_direction_data_))}
    )
    enum_cls.path = property(path)
    return enum_cls


DirectionFile = _create_direction_enum()
DEFAULT_DIRECTION_FILE = DirectionFile['NEW_JOE_KUO_6_1024']


def register_direction_file[AnyStr: (str, bytes)](
    __path: AnyStr | os.PathLike[AnyStr], name: str = None
) -> Path:
    """Copy a direction-number file into the bundled registry.

    The file is parsed first, so a file that would fail at engine
    construction never enters the registry. Registered files become
    :class:`DirectionFile` members on the next import.

    Parameters
    ----------
    __path : AnyStr | PathLike[AnyStr]
        Path to a Joe–Kuo formatted text file.
    name : str, optional
        File name to register under. Defaults to the source file name.

    Returns
    -------
    Path
        Location of the registered copy.

    Raises
    ------
    FileNotFoundError
        If the specified path does not exist.
    MalformedRow, InvalidM, NonContiguousDimension
        If the file does not parse as a direction table.
    """
    from ..qmc.directions import _load_cached, parse_direction_file

    path_obj = Path(os.fsdecode(__path))
    if not path_obj.exists():
        raise FileNotFoundError(f"{os.fsdecode(__path)!r}")
    try:
        with path_obj.open('r', encoding='ascii') as f:
            table = parse_direction_file(f)
    except ValueError as err:
        err.add_note(f"{path_obj.resolve()!r}")
        raise
    target = directions / (name or path_obj.name)
    if target.exists() and target.read_bytes() == path_obj.read_bytes():
        logger.info("%s is already registered", target.name)
        return target
    shutil.copyfile(path_obj, target)
    _load_cached.cache_clear()
    global _direction_data_
    _direction_data_ = _validate(rebuild=True)
    logger.info(
        "registered direction file %s (%d dimensions)", target.name, table.max_dimension
    )
    return target


__all__ = ['DEFAULT_DIRECTION_FILE', 'DirectionFile', 'register_direction_file']
