import configparser
import logging
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from .cns import SEARCH, STRATEGIES
from .exceptions import E2NetError, ParameterError
from .harness import IDX, REFERENCE_SEEDS, SYNTHETIC, DataConfig, ExperimentConfig
from .scer import parse_rehearsal_frequency
from .trainer import CLASS_IL, E2NET, EVAL_MODES, METHODS, TrainConfig
from .utils import parse_seed_list
from .verification import SUITES

logger = logging.getLogger(__name__)

SECTIONS = ('experiment', 'network', 'schedule', 'cns', 'rnd', 'scer', 'trainer', 'data')

# file/CLI spellings that differ from the field names
KEY_ALIASES = {
    'lambda': 'lam',
    'buffer': 'capacity',
    'tasks': 'num_tasks',
    'strategy': 'cns_strategy',
    'seed': 'seeds',
}

TRAIN_FIELDS = (
    'method', 'num_tasks', 'groups', 'hidden', 'epochs', 'batch_size', 'lr', 'lam', 'alpha',
    'beta1', 'beta2', 'capacity', 'candidates', 'selection_size', 'cns_strategy', 'masking', 'eval_mode',
)
DATA_FIELDS = (
    'source', 'num_classes', 'samples_per_class', 'test_samples_per_class', 'input_dim', 'sigma',
    'train_images', 'train_labels', 'test_images', 'test_labels', 'standardize',
)


def load_experiment_file(path):
    """Flatten an INI experiment file into one key/value mapping."""
    parser = configparser.ConfigParser()
    path = Path(path)
    try:
        with open(path) as f:
            parser.read_file(f)
    except FileNotFoundError:
        raise ParameterError(f'Experiment file {path} does not exist')
    except configparser.Error as exc:
        raise ParameterError(f'Experiment file {path} is not valid: {exc}')

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ParameterError(f'Unknown section [{section}] in {path}; expected one of {", ".join(SECTIONS)}')
        for key, value in parser.items(section):
            key = KEY_ALIASES.get(key, key)
            if key in values:
                raise ParameterError(f'Key {key!r} set twice in {path}')
            values[key] = value
    logger.debug(f'Loaded {len(values)} settings from {path}')
    return values


class ExperimentConfigSerializer(serializers.Serializer):
    # [experiment]
    method = serializers.ChoiceField(choices=METHODS, default=E2NET)
    seeds = serializers.CharField(default=','.join(map(str, REFERENCE_SEEDS)))
    out = serializers.CharField(required=False, allow_blank=True, default='')
    workers = serializers.IntegerField(min_value=1, default=lambda: settings.E2NET_SETTINGS['WORKERS'])
    timing = serializers.BooleanField(default=True)
    checkpoint = serializers.BooleanField(default=False)
    resume = serializers.BooleanField(default=False)
    verify = serializers.CharField(required=False, allow_blank=True, default='')

    # [network] / [schedule]
    hidden = serializers.CharField(allow_blank=True, default='64,64')
    groups = serializers.IntegerField(min_value=1, default=8)
    num_tasks = serializers.IntegerField(min_value=1, default=5)

    # [cns] / [rnd]
    candidates = serializers.IntegerField(min_value=1, default=64)
    selection_size = serializers.IntegerField(min_value=1, default=256)
    cns_strategy = serializers.ChoiceField(choices=STRATEGIES, default=SEARCH)
    lam = serializers.FloatField(min_value=0.0, default=0.05)

    # [scer]
    capacity = serializers.IntegerField(min_value=0, default=200)
    alpha = serializers.FloatField(min_value=0.0, default=0.75)
    beta1 = serializers.FloatField(min_value=0.0, default=0.5)
    beta2 = serializers.FloatField(min_value=0.0, default=0.1)
    rf = serializers.CharField(default='1')

    # [trainer]
    epochs = serializers.IntegerField(min_value=1, default=5)
    batch_size = serializers.IntegerField(min_value=1, default=32)
    lr = serializers.FloatField(min_value=0.0, default=0.03)
    masking = serializers.BooleanField(default=True)
    eval_mode = serializers.ChoiceField(choices=EVAL_MODES, default=CLASS_IL)

    # [data]
    source = serializers.ChoiceField(choices=(SYNTHETIC, IDX), default=SYNTHETIC)
    num_classes = serializers.IntegerField(min_value=2, default=10)
    samples_per_class = serializers.IntegerField(min_value=1, default=320)
    test_samples_per_class = serializers.IntegerField(min_value=1, default=100)
    input_dim = serializers.IntegerField(min_value=1, default=16)
    sigma = serializers.FloatField(default=0.1)
    data_seed = serializers.IntegerField(min_value=0, default=0)
    train_images = serializers.CharField(allow_blank=True, default='')
    train_labels = serializers.CharField(allow_blank=True, default='')
    test_images = serializers.CharField(allow_blank=True, default='')
    test_labels = serializers.CharField(allow_blank=True, default='')
    standardize = serializers.BooleanField(default=True)

    def to_internal_value(self, data):
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: 'Unknown setting' for key in unknown})
        return super().to_internal_value(data)

    def validate_seeds(self, value):
        try:
            seeds = parse_seed_list(value)
        except ValueError:
            raise serializers.ValidationError('Seeds must be a comma-separated list of integers')
        if any(seed < 0 for seed in seeds):
            raise serializers.ValidationError('Seeds must be non-negative')
        if len(set(seeds)) != len(seeds):
            raise serializers.ValidationError('Seeds must be unique')
        return tuple(seeds)

    def validate_hidden(self, value):
        try:
            widths = tuple(int(part) for part in value.replace(' ', '').split(',') if part)
        except ValueError:
            raise serializers.ValidationError('Hidden widths must be a comma-separated list of integers')
        if any(width < 1 for width in widths):
            raise serializers.ValidationError('Hidden widths must be positive')
        return widths

    def validate_rf(self, value):
        try:
            return parse_rehearsal_frequency(value)
        except ParameterError as exc:
            raise serializers.ValidationError(str(exc))

    def validate_sigma(self, value):
        if value <= 0:
            raise serializers.ValidationError('Cluster spread must be positive')
        return value

    def validate_verify(self, value):
        suites = tuple(part for part in value.replace(' ', '').split(',') if part)
        unknown = [name for name in suites if name not in SUITES and name != 'all']
        if unknown:
            raise serializers.ValidationError(f'Unknown verification suites: {", ".join(unknown)}')
        return suites

    def validate(self, attrs):
        for width in attrs['hidden']:
            if width % attrs['groups']:
                raise serializers.ValidationError(
                    {'hidden': f'Width {width} is not divisible by {attrs["groups"]} groups'}
                )
        if attrs['num_classes'] % attrs['num_tasks']:
            raise serializers.ValidationError(
                {'num_tasks': f'{attrs["num_classes"]} classes cannot be split into {attrs["num_tasks"]} tasks'}
            )
        if attrs['source'] == IDX and not (attrs['train_images'] and attrs['train_labels']):
            raise serializers.ValidationError({'train_images': 'IDX data needs train_images and train_labels'})
        if attrs['test_images'] and not attrs['test_labels']:
            raise serializers.ValidationError({'test_labels': 'test_images given without test_labels'})
        if attrs['resume'] and not attrs['checkpoint']:
            raise serializers.ValidationError({'resume': 'Resuming requires checkpoint = true'})
        if (attrs['checkpoint'] or attrs['resume']) and not attrs['out']:
            raise serializers.ValidationError({'checkpoint': 'Checkpoints need an output directory'})

        try:
            attrs['train'] = self._train_config(attrs)
        except E2NetError as exc:
            raise serializers.ValidationError({'non_field_errors': [str(exc)]})
        return attrs

    @staticmethod
    def _train_config(attrs):
        kwargs = {name: attrs[name] for name in TRAIN_FIELDS}
        kwargs['rehearsal_every'] = attrs['rf']
        return TrainConfig(**kwargs)

    def create(self, validated_data):
        data = DataConfig(seed=validated_data['data_seed'], **{name: validated_data[name] for name in DATA_FIELDS})
        return ExperimentConfig(
            train=validated_data['train'],
            data=data,
            seeds=validated_data['seeds'],
            output_dir=validated_data['out'] or None,
            workers=validated_data['workers'],
            timing=validated_data['timing'],
            checkpoint=validated_data['checkpoint'],
            resume=validated_data['resume'],
            verify=validated_data['verify'],
        )


def build_experiment_config(values):
    """Validate a flat settings mapping; raises ValidationError listing every bad field."""
    serializer = ExperimentConfigSerializer(data=values)
    serializer.is_valid(raise_exception=True)
    return serializer.save()
