'''
Run-directory persistence for the acex package.

Layout of a run directory::

    header.json               schema version, package version, run id, mesh shape, config echo
    config.yml                re-runnable configuration echo
    mesh/nodes.csv            id, x, y
    mesh/elements.csv         id, n1, n2, n3, n4
    snapshots/snap_NNNNN.npz  one compressed archive per snapshot
    snapshots/index.csv       snapshot, file, time, phase, increment
    analysis/*.csv, *.svg     post-processing tables and plots
    summary.json              machine-readable analysis summary
    failure.json              solver diagnostics (failed runs only)

Tables are written with a fixed float format so repeated runs give identical files.
'''

import json
import logging
import os

import numpy as np
import pandas as pd

from .. import __version__
from ..geometry.mesh import Mesh, face_sets
from ..models.contact import ContactState
from ..models.solver import FieldSnapshot
from .config import SCHEMA_VERSION, load_config, save_config

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10e'
PHASE_NAMES = ('PunchPush', 'ArcPush', 'PullOut', 'Released')


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(path, payload):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write('\n')
    return path


def write_table(path, frame):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


class RunDirectory:
    '''Reads and writes one simulation run directory.'''

    def __init__(self, root):
        self.root = os.path.abspath(root)
        self.snapshot_dir = os.path.join(self.root, 'snapshots')
        self.mesh_dir = os.path.join(self.root, 'mesh')
        self.analysis_dir = os.path.join(self.root, 'analysis')
        self._index = []

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def exists(self):
        return os.path.isfile(self.path('header.json'))

    def create(self, config, mesh):
        '''Writes the header, config echo and mesh tables of a new run.'''
        for directory in (self.root, self.snapshot_dir, self.mesh_dir, self.analysis_dir):
            os.makedirs(directory, exist_ok=True)
        header = {
            'schema_version': SCHEMA_VERSION,
            'package_version': __version__,
            'run_id': config['run']['name'],
            'mesh': {'nx': mesh.nx, 'ny': mesh.ny, 'element_size': mesh.element_size},
            'config': config,
        }
        write_json(self.path('header.json'), header)
        save_config(config, self.path('config.yml'))
        self.write_mesh(mesh, self.mesh_dir)
        self._index = []
        logger.info("Created run directory %s", self.root)
        return self

    @staticmethod
    def write_mesh(mesh, directory):
        os.makedirs(directory, exist_ok=True)
        nodes, elements = mesh.to_frames()
        write_table(os.path.join(directory, 'nodes.csv'), nodes)
        elements.to_csv(os.path.join(directory, 'elements.csv'), index=False)
        return directory

    def header(self):
        with open(self.path('header.json'), 'r', encoding='utf-8') as handle:
            return json.load(handle)

    def config(self):
        return load_config(self.path('config.yml'))

    def mesh(self):
        header = self.header()['mesh']
        nodes = pd.read_csv(os.path.join(self.mesh_dir, 'nodes.csv'))
        elements = pd.read_csv(os.path.join(self.mesh_dir, 'elements.csv'))
        return Mesh(nodes[['x', 'y']].to_numpy(), elements[['n1', 'n2', 'n3', 'n4']].to_numpy(),
                    face_sets(header['nx'], header['ny']), header['element_size'],
                    header['nx'], header['ny'])

    def write_snapshot(self, snapshot):
        '''Streams one snapshot to disk and appends it to the index.'''
        number = len(self._index)
        name = f"snap_{number:05d}.npz"
        contact = snapshot.contact_state
        np.savez_compressed(
            os.path.join(self.snapshot_dir, name),
            time=np.float64(snapshot.time),
            phase_code=np.int64(snapshot.phase_code),
            increment=np.int64(snapshot.increment),
            nodal_coords=snapshot.nodal_coords,
            gp_stress=snapshot.gp_stress,
            gp_eqps=snapshot.gp_eqps,
            nodal_stress=snapshot.nodal_stress,
            contact_node_ids=contact.node_ids,
            contact_gap=contact.gap,
            contact_active=contact.active,
            contact_normal_force=contact.normal_force,
            contact_normal=contact.normal,
            contact_wall=np.asarray(contact.wall_id, dtype=str),
            info=np.array(json.dumps(snapshot.info, sort_keys=True, default=_json_default)),
        )
        self._index.append({'snapshot': number, 'file': name, 'time': snapshot.time,
                            'phase': snapshot.phase, 'increment': snapshot.increment})
        write_table(os.path.join(self.snapshot_dir, 'index.csv'), pd.DataFrame(self._index))
        return name

    def snapshot_index(self):
        return pd.read_csv(os.path.join(self.snapshot_dir, 'index.csv'))

    def load_snapshot(self, number):
        with np.load(os.path.join(self.snapshot_dir, f"snap_{int(number):05d}.npz")) as data:
            contact = ContactState(data['contact_node_ids'], data['contact_gap'], data['contact_active'],
                                   data['contact_normal_force'], data['contact_normal'],
                                   data['contact_wall'].astype(object))
            return FieldSnapshot(time=float(data['time']), phase=PHASE_NAMES[int(data['phase_code'])],
                                 increment=int(data['increment']), nodal_coords=data['nodal_coords'],
                                 gp_stress=data['gp_stress'], gp_eqps=data['gp_eqps'],
                                 nodal_stress=data['nodal_stress'], contact_state=contact,
                                 info=json.loads(str(data['info'])))

    def load_snapshots(self, numbers=None):
        index = self.snapshot_index()
        numbers = index['snapshot'].tolist() if numbers is None else numbers
        return [self.load_snapshot(number) for number in numbers]

    def final_snapshot(self):
        index = self.snapshot_index()
        return self.load_snapshot(int(index['snapshot'].iloc[-1]))

    def window_snapshots(self, start, end):
        index = self.snapshot_index()
        chosen = index[(index['time'] >= start) & (index['time'] <= end) & (index['phase'] != 'Released')]
        return self.load_snapshots(chosen['snapshot'].tolist())

    def write_analysis_table(self, name, frame):
        os.makedirs(self.analysis_dir, exist_ok=True)
        return write_table(os.path.join(self.analysis_dir, name), frame)

    def write_summary(self, summary):
        return write_json(self.path('summary.json'), summary)

    def read_summary(self):
        with open(self.path('summary.json'), 'r', encoding='utf-8') as handle:
            return json.load(handle)

    def write_failure(self, diagnostics):
        os.makedirs(self.root, exist_ok=True)
        return write_json(self.path('failure.json'), diagnostics)
