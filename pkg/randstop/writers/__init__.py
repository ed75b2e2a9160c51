from randstop.writers.base_writer import Writer
from randstop.writers.csv_writer import CsvWriter, ResultWriter
from randstop.writers.run_writer import RunWriter
