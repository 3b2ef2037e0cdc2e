from .tasks import TASKS
from .loader import Scenario, load_scenario, parse_yaml
from .runner import run_task, check_expect
from .report import build_report, write_report
from .utils import data_root, file_digest, resolve_scenario, shipped_scenarios
