from localmax.data.dataset import Dataset, Standardization, load_csv, save_csv, split_standardize
from localmax.data.synthetic import GmmConfig, sample_gmm, sample_uniform_background, sample_point_set_1d
