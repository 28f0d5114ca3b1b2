"""
Trust store: profiles of public keys bound to sandbox rules

Layout under the store root:

    identity/private_key.pem, identity/public_key.json   local signing identity
    profiles/<name>/rules.json                           capabilities + limits
    profiles/<name>/keys/<key_id>.json                   imported public keys

A missing rules.json means deny-all. The "untrusted" profile always exists
and always denies, whatever its rules.json says. Moving a key file between
profile directories changes which rules its payloads run under.
"""
import json
import logging
import os
import shutil
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from apps.core.conf import udfvault_setting
from apps.core.serialization import canonical_json
from apps.runtime.services.environment import Capabilities, Limits

from ..exceptions import DuplicateKey, StorageError, UnknownKey, UnknownProfile
from .keys import KeyRecord, ensure_keypair, key_id_for

logger = logging.getLogger(__name__)

UNTRUSTED = 'untrusted'
TRUSTED = 'trusted'
RULES_FILE = 'rules.json'
KEYS_DIR = 'keys'

_ROOT_LOCKS: Dict[str, threading.Lock] = {}
_ROOT_LOCKS_GUARD = threading.Lock()


def _lock_for(root: Path) -> threading.Lock:
    with _ROOT_LOCKS_GUARD:
        return _ROOT_LOCKS.setdefault(str(root.resolve()), threading.Lock())


def write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.')
    try:
        with os.fdopen(descriptor, 'wb') as handle:
            handle.write(data)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


@dataclass(frozen=True)
class TrustProfile:
    name: str
    capabilities: Capabilities
    limits: Limits
    key_dir: Path

    def to_dict(self) -> Dict[str, Any]:
        return {
            'capabilities': self.capabilities.to_dict(),
            'key_dir': str(self.key_dir),
            'limits': self.limits.to_dict(),
            'name': self.name,
        }


@dataclass(frozen=True)
class KeyEntry:
    key_id: str
    profile: str
    record: KeyRecord
    path: Path

    def to_dict(self) -> Dict[str, Any]:
        return {
            'email': self.record.owner_email,
            'key_id': self.key_id,
            'name': self.record.owner_name,
            'path': str(self.path),
            'profile': self.profile,
        }


class TrustStore:
    """
    Trust store rooted at a directory.

    Args:
        root: Store root; UDFVAULT HOME (env UDFVAULT_HOME) when omitted
    """

    SEED_RULES = {
        UNTRUSTED: {'capabilities': Capabilities.deny_all().to_dict()},
        TRUSTED: {'capabilities': Capabilities(hosted_allowed=True).to_dict()},
    }

    def __init__(self, root: Optional[Union[str, Path]] = None):
        self.root = Path(root or udfvault_setting('HOME')).expanduser()
        self.profiles_dir = self.root / 'profiles'
        self.identity_dir = self.root / 'identity'
        self._lock = _lock_for(self.root)
        self.initialize()

    def initialize(self) -> None:
        """
        Create the layout and seed profiles that are missing.

        Raises:
            StorageError: root is not writable
            DuplicateKey: a public key sits in two profile directories
        """
        try:
            for name, rules in self.SEED_RULES.items():
                keys_dir = self.profiles_dir / name / KEYS_DIR
                keys_dir.mkdir(parents=True, exist_ok=True)
                rules_path = self.profiles_dir / name / RULES_FILE
                if not rules_path.exists():
                    write_atomic(rules_path, canonical_json(rules) + b'\n')
        except OSError as exc:
            raise StorageError(f"Cannot initialize trust store at {self.root}: {exc}") from exc
        self._scan()

    # Profiles

    def profile_names(self) -> List[str]:
        return sorted(entry.name for entry in self.profiles_dir.iterdir() if entry.is_dir())

    def create_profile(
        self,
        name: str,
        capabilities: Optional[Capabilities] = None,
        limits: Optional[Dict[str, Any]] = None,
    ) -> 'TrustProfile':
        if not name or '/' in name or name.startswith('.'):
            raise UnknownProfile(f"{name!r} is not a valid profile name", profile=name)
        (self.profiles_dir / name / KEYS_DIR).mkdir(parents=True, exist_ok=True)
        rules: Dict[str, Any] = {'capabilities': (capabilities or Capabilities()).to_dict()}
        if limits:
            rules['limits'] = dict(limits)
        write_atomic(self.profiles_dir / name / RULES_FILE, canonical_json(rules) + b'\n')
        logger.info(f"Created trust profile {name}")
        return self.load_profile(name)

    def load_profile(self, name: str) -> TrustProfile:
        """
        Raises:
            UnknownProfile: no such profile directory
            StorageError: rules.json is unreadable
        """
        directory = self.profiles_dir / name
        if not directory.is_dir():
            raise UnknownProfile(f"No trust profile named {name!r}", profile=name)
        rules_path = directory / RULES_FILE
        rules: Dict[str, Any] = {}
        if rules_path.exists():
            try:
                rules = json.loads(rules_path.read_text(encoding='utf-8'))
            except (OSError, ValueError) as exc:
                raise StorageError(
                    f"Cannot load {rules_path}: {exc}", path=str(rules_path)
                ) from exc

        capabilities = Capabilities.from_dict(rules.get('capabilities'))
        if name == UNTRUSTED and capabilities != Capabilities.deny_all():
            logger.warning(f"{rules_path} grants capabilities; the untrusted profile always denies")
            capabilities = Capabilities.deny_all()
        try:
            limits = Limits.from_dict(rules.get('limits'))
        except (TypeError, ValueError) as exc:
            raise StorageError(f"Bad limits in {rules_path}: {exc}", path=str(rules_path)) from exc
        return TrustProfile(name, capabilities, limits, directory / KEYS_DIR)

    # Keys

    def _scan(self) -> Dict[str, KeyEntry]:
        entries: Dict[str, KeyEntry] = {}
        for name in self.profile_names():
            keys_dir = self.profiles_dir / name / KEYS_DIR
            if not keys_dir.is_dir():
                continue
            for path in sorted(keys_dir.glob('*.json')):
                record = KeyRecord.load(path)
                key_id = record.key_id
                if key_id in entries:
                    raise DuplicateKey(
                        f"Key {key_id} is in both {entries[key_id].profile!r} and {name!r}",
                        key_id=key_id,
                    )
                entries[key_id] = KeyEntry(key_id, name, record, path)
        return entries

    def list_keys(self) -> List[KeyEntry]:
        return sorted(self._scan().values(), key=lambda entry: (entry.profile, entry.key_id))

    def find_profile(self, public_key: bytes) -> Optional[TrustProfile]:
        """Profile holding public_key, without importing it."""
        entry = self._scan().get(key_id_for(public_key))
        return self.load_profile(entry.profile) if entry else None

    def resolve_profile(
        self, public_key: bytes, owner_name: str = '', owner_email: str = ''
    ) -> TrustProfile:
        """
        Profile holding public_key. An unknown key is imported into the
        untrusted profile, which is then returned.
        """
        with self._lock:
            entry = self._scan().get(key_id_for(public_key))
            if entry is not None:
                logger.debug(f"Key {entry.key_id} resolved to profile {entry.profile}")
                return self.load_profile(entry.profile)
            record = KeyRecord(bytes(public_key), owner_name, owner_email)
            self._write_key(record, UNTRUSTED)
        logger.info(
            f"Imported unknown key {record.key_id} ({owner_name} <{owner_email}>) into {UNTRUSTED}"
        )
        return self.load_profile(UNTRUSTED)

    def _write_key(self, record: KeyRecord, profile: str) -> Path:
        path = self.profiles_dir / profile / KEYS_DIR / f'{record.key_id}.json'
        try:
            write_atomic(path, record.to_json())
        except OSError as exc:
            raise StorageError(f"Cannot write {path}: {exc}", path=str(path)) from exc
        return path

    def import_key(self, record: KeyRecord, profile: str = UNTRUSTED) -> Path:
        """
        Raises:
            DuplicateKey: the key already lives in some profile
            UnknownProfile
        """
        self.load_profile(profile)
        with self._lock:
            existing = self._scan().get(record.key_id)
            if existing is not None:
                raise DuplicateKey(
                    f"Key {record.key_id} is already in profile {existing.profile!r}",
                    key_id=record.key_id,
                )
            path = self._write_key(record, profile)
        logger.info(f"Imported key {record.key_id} into {profile}")
        return path

    def move_key(self, key_id: str, profile: str) -> Path:
        """
        Move a key file to another profile.

        Raises:
            UnknownKey, UnknownProfile
        """
        self.load_profile(profile)
        with self._lock:
            entry = self._scan().get(key_id)
            if entry is None:
                raise UnknownKey(f"No key with id {key_id}", key_id=key_id)
            target = self.profiles_dir / profile / KEYS_DIR / entry.path.name
            if entry.profile != profile:
                target.parent.mkdir(parents=True, exist_ok=True)
                shutil.move(str(entry.path), str(target))
        logger.info(f"Moved key {key_id} from {entry.profile} to {profile}")
        return target

    # Identity

    def identity(
        self, owner: Optional[Tuple[str, str]] = None
    ) -> Tuple[KeyRecord, Ed25519PrivateKey]:
        """Local signing identity, created on first use."""
        return ensure_keypair(self.identity_dir, owner)
