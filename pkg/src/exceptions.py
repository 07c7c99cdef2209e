class ProtocolError(Exception):
    """
    Базовая ошибка инструментария

    Хранит код завершения CLI и текстовое описание, по аналогии
    с парой status_code/detail у HTTP-исключений

    Args:
        exit_code(int): код завершения процесса при выходе через main()
        detail(str): описание ошибки для пользователя
    """
    exit_code: int = 1

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigurationError(ProtocolError):
    """
    Некорректные параметры: конфигурация, диапазон сканирования, индекс
    """
    exit_code = 2


class SizeCapError(ConfigurationError):
    """
    Превышен допустимый размер плотной матрицы плотности
    """


class InvalidStateError(ProtocolError):
    """
    Матрица не является корректной матрицей плотности
    """
    exit_code = 1


class VerificationError(ProtocolError):
    """
    Перекрёстная проверка аналитической модели и оракула не прошла
    """
    exit_code = 1


class OutputError(ProtocolError):
    """
    Ошибка записи или чтения CSV
    """
    exit_code = 1
