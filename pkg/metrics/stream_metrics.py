import numpy as np


class _StreamMetrics(object):
    def __init__(self):
        """ Overridden by subclasses """
        raise NotImplementedError()

    def update(self, *args, **kwargs):
        """ Overridden by subclasses """
        raise NotImplementedError()

    def get_results(self):
        """ Overridden by subclasses """
        raise NotImplementedError()

    def to_str(self, metrics):
        """ Overridden by subclasses """
        raise NotImplementedError()

    def reset(self):
        """ Overridden by subclasses """
        raise NotImplementedError()


class RankBandMetrics(_StreamMetrics):
    """
    Streaming check of lower <= rank <= upper over batches of sample points
    (path slices, stages, extension outputs).
    """
    def __init__(self):
        self.reset()

    def update(self, ranks, lower, upper, points, tag=None):
        ranks = np.asarray(ranks).reshape(-1)
        lower = np.broadcast_to(np.asarray(lower), ranks.shape)
        upper = np.broadcast_to(np.asarray(upper), ranks.shape)
        points = np.asarray(points).reshape(-1)
        if not len(ranks):
            return
        self.checked += len(ranks)
        low_gap = ranks - lower
        up_gap = upper - ranks
        i = int(np.argmin(low_gap))
        if low_gap[i] < self.lower_margin:
            self.lower_margin = int(low_gap[i])
            self.lower_witness = {'point': int(points[i]), 'rank': int(ranks[i]),
                                  'bound': int(lower[i]), 'tag': tag}
        j = int(np.argmin(up_gap))
        if up_gap[j] < self.upper_margin:
            self.upper_margin = int(up_gap[j])
            self.upper_witness = {'point': int(points[j]), 'rank': int(ranks[j]),
                                  'bound': int(upper[j]), 'tag': tag}
        self.violations += int(np.sum((low_gap < 0) | (up_gap < 0)))
        self.min_rank = min(self.min_rank, int(ranks.min()))
        self.max_rank = max(self.max_rank, int(ranks.max()))

    @staticmethod
    def to_str(results):
        string = "\n"
        for k, v in results.items():
            string += "%s: %s\n" % (k, v)
        return string

    def get_results(self):
        witnesses = []
        if self.lower_margin < 0:
            witnesses.append(dict(self.lower_witness, side='lower'))
        if self.upper_margin < 0:
            witnesses.append(dict(self.upper_witness, side='upper'))
        return {
            "passed": self.violations == 0,
            "checked": self.checked,
            "violations": self.violations,
            "lower_margin": self.lower_margin if self.checked else None,
            "upper_margin": self.upper_margin if self.checked else None,
            "min_rank": self.min_rank if self.checked else None,
            "max_rank": self.max_rank if self.checked else None,
            "witnesses": witnesses,
        }

    def reset(self):
        self.checked = 0
        self.violations = 0
        self.lower_margin = np.iinfo(np.int64).max
        self.upper_margin = np.iinfo(np.int64).max
        self.lower_witness = None
        self.upper_witness = None
        self.min_rank = np.iinfo(np.int64).max
        self.max_rank = -1


class MarginMeter(object):
    """Tracks the worst (smallest) real-valued margin per named check."""
    def __init__(self):
        self.book = dict()

    def reset_all(self):
        self.book.clear()

    def update(self, id, margins, points, tag=None):
        margins = np.asarray(margins, dtype=np.float64).reshape(-1)
        if not len(margins):
            return
        i = int(np.argmin(margins))
        record = self.book.get(id, None)
        if record is None or margins[i] < record['margin']:
            self.book[id] = {'margin': float(margins[i]), 'point': int(np.asarray(points).reshape(-1)[i]),
                             'tag': tag, 'count': (record['count'] if record else 0) + len(margins)}
        else:
            record['count'] += len(margins)

    def get_results(self, id):
        record = self.book.get(id, None)
        assert record is not None, "no margins recorded for %r" % (id,)
        return dict(record)
